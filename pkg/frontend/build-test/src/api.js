/** Thin fetch client for the review service, with bounded retries on
 * network-level failures. HTTP error statuses are surfaced as ApiError and
 * never retried (a 422 will not become a 200 by asking again). */
export class ApiError extends Error {
    constructor(message, status) {
        super(message);
        this.status = status;
    }
}
const sleep = (ms) => new Promise((resolve) => setTimeout(resolve, ms));
export class ReviewApi {
    constructor(baseUrl, fetchFn = (url, init) => fetch(url, init), retries = 2, backoffMs = 250) {
        this.baseUrl = baseUrl;
        this.fetchFn = fetchFn;
        this.retries = retries;
        this.backoffMs = backoffMs;
    }
    async request(path, init) {
        let lastError = null;
        for (let attempt = 0; attempt <= this.retries; attempt++) {
            let response;
            try {
                response = await this.fetchFn(this.baseUrl + path, init);
            }
            catch (error) {
                lastError = error;
                if (attempt < this.retries)
                    await sleep(this.backoffMs * (attempt + 1));
                continue;
            }
            if (!response.ok) {
                let detail = "";
                try {
                    const body = (await response.json());
                    detail = body.error ?? "";
                }
                catch {
                    // non-JSON error body; status alone will have to do
                }
                throw new ApiError(detail || `HTTP ${response.status}`, response.status);
            }
            return (await response.json());
        }
        throw new ApiError(`network failure after ${this.retries + 1} attempts: ${lastError}`, null);
    }
    nextItem(annotator) {
        return this.request(`/api/items?annotator=${encodeURIComponent(annotator)}`);
    }
    submitJudgment(recordId, body) {
        return this.request(`/api/items/${recordId}/judgment`, {
            method: "POST",
            headers: { "Content-Type": "application/json" },
            body: JSON.stringify(body),
        });
    }
    agreement() {
        return this.request("/api/agreement");
    }
    progress() {
        return this.request("/api/progress");
    }
}
