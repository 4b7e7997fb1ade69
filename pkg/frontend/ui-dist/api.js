/** Typed client for the study service JSON API. */
export class ApiError extends Error {
    constructor(message, status = null) {
        super(message);
        this.status = status;
        this.name = 'ApiError';
    }
}
export class ApiClient {
    constructor(baseUrl = '', fetchFn = (input, init) => fetch(input, init)) {
        this.baseUrl = baseUrl;
        this.fetchFn = fetchFn;
    }
    async request(path, init) {
        let response;
        try {
            response = await this.fetchFn(this.baseUrl + path, init);
        }
        catch (err) {
            throw new ApiError(`network failure: ${String(err)}`);
        }
        const body = await response.text();
        if (!response.ok) {
            let detail = body;
            try {
                detail = JSON.parse(body).detail ?? body;
            }
            catch {
                /* plain-text error body */
            }
            throw new ApiError(`${detail}`, response.status);
        }
        return JSON.parse(body);
    }
    openSession(studyId, evaluatorId) {
        return this.request(`/api/studies/${encodeURIComponent(studyId)}/sessions`, {
            method: 'POST',
            headers: { 'Content-Type': 'application/json' },
            body: JSON.stringify({ evaluator_id: evaluatorId }),
        });
    }
    nextItem(sessionId) {
        return this.request(`/api/sessions/${encodeURIComponent(sessionId)}/next`);
    }
    submitAnswers(sessionId, itemId, choices, ratings) {
        const path = `/api/sessions/${encodeURIComponent(sessionId)}/items/` +
            `${encodeURIComponent(itemId)}/answers`;
        return this.request(path, {
            method: 'POST',
            headers: { 'Content-Type': 'application/json' },
            body: JSON.stringify({ choices, ratings }),
        });
    }
}
