/** Local answer state for one study item; nothing is sent until complete. */
export const CHOICES = ['True', 'False', 'Unsure'];
export const RATING_DIMENSIONS = ['readability', 'quality', 'background_knowledge'];
export const RATING_LEVELS = ['Low', 'Medium', 'High'];
export const RATING_TITLES = {
    readability: 'Readability',
    quality: 'Quality',
    background_knowledge: 'Background Knowledge',
};
export class ItemFormState {
    constructor(questionIds) {
        this.questionIds = questionIds;
        this.choices = new Map();
        this.ratings = new Map();
    }
    setChoice(questionId, choice) {
        if (!this.questionIds.includes(questionId)) {
            throw new Error(`unknown question: ${questionId}`);
        }
        if (!CHOICES.includes(choice)) {
            throw new Error(`invalid choice: ${choice}`);
        }
        this.choices.set(questionId, choice);
    }
    setRating(dimension, level) {
        if (!RATING_DIMENSIONS.includes(dimension)) {
            throw new Error(`unknown rating dimension: ${dimension}`);
        }
        if (!RATING_LEVELS.includes(level)) {
            throw new Error(`invalid rating level: ${level}`);
        }
        this.ratings.set(dimension, level);
    }
    choiceFor(questionId) {
        return this.choices.get(questionId);
    }
    ratingFor(dimension) {
        return this.ratings.get(dimension);
    }
    get missingQuestions() {
        return this.questionIds.filter((id) => !this.choices.has(id));
    }
    get missingRatings() {
        return RATING_DIMENSIONS.filter((dim) => !this.ratings.has(dim));
    }
    /** Submit must stay blocked until every question and all three ratings are set. */
    get complete() {
        return this.missingQuestions.length === 0 && this.missingRatings.length === 0;
    }
    payload() {
        return {
            choices: Object.fromEntries(this.choices),
            ratings: Object.fromEntries(this.ratings),
        };
    }
}
