/** Session flow: join, iterate items, submit, resume, and recover from errors. */

import { ApiClient, NextItem } from './api.js';
import { ItemFormState } from './state.js';

export interface SessionView {
  showItem(item: NextItem, state: ItemFormState): void;
  showDone(total: number): void;
  /** Network-level failure: keep local state, offer a retry. */
  showError(message: string, retry: () => void): void;
  /** Pre-submit validation failure; no request was sent. */
  showValidation(missingQuestions: string[], missingRatings: string[]): void;
}

export class SessionController {
  private sessionId: string | null = null;
  private current: NextItem | null = null;
  state: ItemFormState | null = null;

  constructor(
    private readonly api: ApiClient,
    private readonly view: SessionView,
  ) {}

  async join(studyId: string, evaluatorId: string): Promise<void> {
    try {
      const session = await this.api.openSession(studyId.trim(), evaluatorId.trim());
      this.sessionId = session.session_id;
    } catch (err) {
      this.view.showError(String((err as Error).message ?? err), () =>
        void this.join(studyId, evaluatorId),
      );
      return;
    }
    await this.advance();
  }

  /** Fetch the server's next unanswered item; the cursor lives server-side. */
  async advance(): Promise<void> {
    if (this.sessionId === null) {
      throw new Error('join a study first');
    }
    let item: NextItem;
    try {
      item = await this.api.nextItem(this.sessionId);
    } catch (err) {
      this.view.showError(String((err as Error).message ?? err), () => void this.advance());
      return;
    }
    if (item.done) {
      this.current = null;
      this.state = null;
      this.view.showDone(item.total);
      return;
    }
    this.current = item;
    this.state = new ItemFormState((item.questions ?? []).map((q) => q.id));
    this.view.showItem(item, this.state);
  }

  /**
   * Submit the current item. Incomplete sheets never reach the network; a
   * transport failure keeps the filled-in state and offers a retry.
   */
  async submit(): Promise<boolean> {
    if (this.sessionId === null || this.current === null || this.state === null) {
      throw new Error('no item to submit');
    }
    if (!this.state.complete) {
      this.view.showValidation(this.state.missingQuestions, this.state.missingRatings);
      return false;
    }
    const { choices, ratings } = this.state.payload();
    try {
      await this.api.submitAnswers(this.sessionId, this.current.item_id ?? '', choices, ratings);
    } catch (err) {
      this.view.showError(String((err as Error).message ?? err), () => void this.submit());
      return false;
    }
    await this.advance();
    return true;
  }
}
