// Replay a recorded action log against the service: a fresh session with
// the same creation request and action sequence reproduces the scorecard
// exactly (the backend is deterministic given the recorded seed).

import { DeployResponse, ServiceClient } from "./client.js";
import { Action, ActionLog, SessionView } from "./types.js";

export interface ReplayResult {
    view: SessionView;
    scorecard: DeployResponse;
}

export async function replaySession(
    client: ServiceClient,
    log: ActionLog,
): Promise<ReplayResult> {
    const view = await client.createSession(log.create_request);
    for (const action of log.actions) {
        await client.step(view.id, action as Action);
    }
    const scorecard = await client.deploy(view.id);
    return { view, scorecard };
}

export function scorecardsMatch(a: DeployResponse, b: DeployResponse): boolean {
    return a.regret === b.regret && a.kl === b.kl && a.reward_l2 === b.reward_l2;
}
