// HTTP transport for the review service API.
export class ApiError extends Error {
    constructor(message, status = null) {
        super(message);
        this.status = status;
    }
}
export class HttpTransport {
    constructor(base = "", fetchFn = (input, init) => fetch(input, init)) {
        this.base = base;
        this.fetchFn = fetchFn;
    }
    async request(path, init) {
        let response;
        try {
            response = await this.fetchFn(this.base + path, init);
        }
        catch (err) {
            throw new ApiError(`network failure: ${String(err)}`);
        }
        if (!response.ok) {
            let detail = `${response.status}`;
            try {
                const body = await response.json();
                detail = body.detail ?? body.message ?? detail;
            }
            catch {
                // non-JSON error body; keep the status text
            }
            throw new ApiError(`request failed: ${detail}`, response.status);
        }
        return (await response.json());
    }
    fetchBatch(filter, page, pageSize) {
        const params = new URLSearchParams({
            filter,
            page: String(page),
            page_size: String(pageSize),
        });
        return this.request(`/api/triplets?${params}`);
    }
    submitLabel(tripletId, label, curator) {
        return this.request("/api/labels", {
            method: "POST",
            headers: { "content-type": "application/json" },
            body: JSON.stringify({ triplet_id: tripletId, label, curator }),
        });
    }
    fetchProgress() {
        return this.request("/api/progress");
    }
}
