// Thin HTTP client for the session service. Mutating calls carry an
// idempotency token so a retried request is applied at most once.

import {
    Action,
    CreateSessionRequest,
    Scorecard,
    SessionView,
    StepResponse,
} from "./types.js";

export interface DeployResponse extends Scorecard {
    phase: string;
}

export interface ServiceClient {
    createSession(request: CreateSessionRequest): Promise<SessionView>;
    step(sessionId: string, action: Action, token?: string): Promise<StepResponse>;
    deploy(sessionId: string, token?: string): Promise<DeployResponse>;
    getSession(sessionId: string): Promise<SessionView>;
}

export class ServiceRejection extends Error {
    constructor(
        public readonly code: string,
        message: string,
    ) {
        super(message);
    }
}

async function parse<T>(response: Response): Promise<T> {
    const body = await response.json();
    if (!response.ok) {
        const err = body?.error ?? { code: "http_error", message: response.statusText };
        throw new ServiceRejection(err.code, err.message);
    }
    return body as T;
}

export class HttpClient implements ServiceClient {
    constructor(private readonly baseUrl: string = "") {}

    private async post<T>(path: string, payload: unknown): Promise<T> {
        const response = await fetch(this.baseUrl + path, {
            method: "POST",
            headers: { "content-type": "application/json" },
            body: JSON.stringify(payload),
        });
        return parse<T>(response);
    }

    createSession(request: CreateSessionRequest): Promise<SessionView> {
        return this.post("/sessions", request);
    }

    step(sessionId: string, action: Action, token?: string): Promise<StepResponse> {
        return this.post(`/sessions/${sessionId}/step`, {
            action,
            idempotency_token: token ?? null,
        });
    }

    deploy(sessionId: string, token?: string): Promise<DeployResponse> {
        return this.post(`/sessions/${sessionId}/deploy`, {
            idempotency_token: token ?? null,
        });
    }

    async getSession(sessionId: string): Promise<SessionView> {
        return parse<SessionView>(await fetch(`${this.baseUrl}/sessions/${sessionId}`));
    }
}
