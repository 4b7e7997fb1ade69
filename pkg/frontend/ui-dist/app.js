/** Session flow: join, iterate items, submit, resume, and recover from errors. */
import { ItemFormState } from './state.js';
export class SessionController {
    constructor(api, view) {
        this.api = api;
        this.view = view;
        this.sessionId = null;
        this.current = null;
        this.state = null;
    }
    async join(studyId, evaluatorId) {
        try {
            const session = await this.api.openSession(studyId.trim(), evaluatorId.trim());
            this.sessionId = session.session_id;
        }
        catch (err) {
            this.view.showError(String(err.message ?? err), () => void this.join(studyId, evaluatorId));
            return;
        }
        await this.advance();
    }
    /** Fetch the server's next unanswered item; the cursor lives server-side. */
    async advance() {
        if (this.sessionId === null) {
            throw new Error('join a study first');
        }
        let item;
        try {
            item = await this.api.nextItem(this.sessionId);
        }
        catch (err) {
            this.view.showError(String(err.message ?? err), () => void this.advance());
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
    async submit() {
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
        }
        catch (err) {
            this.view.showError(String(err.message ?? err), () => void this.submit());
            return false;
        }
        await this.advance();
        return true;
    }
}
