/** Local answer state for one study item; nothing is sent until complete. */

export const CHOICES = ['True', 'False', 'Unsure'] as const;
export const RATING_DIMENSIONS = ['readability', 'quality', 'background_knowledge'] as const;
export const RATING_LEVELS = ['Low', 'Medium', 'High'] as const;

export const RATING_TITLES: Record<string, string> = {
  readability: 'Readability',
  quality: 'Quality',
  background_knowledge: 'Background Knowledge',
};

export class ItemFormState {
  private choices = new Map<string, string>();
  private ratings = new Map<string, string>();

  constructor(readonly questionIds: readonly string[]) {}

  setChoice(questionId: string, choice: string): void {
    if (!this.questionIds.includes(questionId)) {
      throw new Error(`unknown question: ${questionId}`);
    }
    if (!(CHOICES as readonly string[]).includes(choice)) {
      throw new Error(`invalid choice: ${choice}`);
    }
    this.choices.set(questionId, choice);
  }

  setRating(dimension: string, level: string): void {
    if (!(RATING_DIMENSIONS as readonly string[]).includes(dimension)) {
      throw new Error(`unknown rating dimension: ${dimension}`);
    }
    if (!(RATING_LEVELS as readonly string[]).includes(level)) {
      throw new Error(`invalid rating level: ${level}`);
    }
    this.ratings.set(dimension, level);
  }

  choiceFor(questionId: string): string | undefined {
    return this.choices.get(questionId);
  }

  ratingFor(dimension: string): string | undefined {
    return this.ratings.get(dimension);
  }

  get missingQuestions(): string[] {
    return this.questionIds.filter((id) => !this.choices.has(id));
  }

  get missingRatings(): string[] {
    return RATING_DIMENSIONS.filter((dim) => !this.ratings.has(dim));
  }

  /** Submit must stay blocked until every question and all three ratings are set. */
  get complete(): boolean {
    return this.missingQuestions.length === 0 && this.missingRatings.length === 0;
  }

  payload(): { choices: Record<string, string>; ratings: Record<string, string> } {
    return {
      choices: Object.fromEntries(this.choices),
      ratings: Object.fromEntries(this.ratings),
    };
  }
}
