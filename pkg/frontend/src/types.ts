// Wire types for the teaching session service. The UI holds no game logic:
// every number below originates from a service payload.

export type Phase = "learning" | "deployed" | "closed";

export interface BeliefSummary {
    preview: boolean;
    mean_heatmap: number[];
    map_heatmap: number[];
    top_particles: { index: number; weight: number }[];
}

export interface Scorecard {
    start_state: number[];
    rollout: number[][];
    theta_hat_heatmap: number[];
    map_heatmap: number[];
    regret: number;
    kl: number;
    reward_l2: number;
}

export interface SessionView {
    id: string;
    grid_size: number;
    learning_steps: number;
    feature_centers: number[][];
    initial_state: number[];
    phase: Phase;
    steps_remaining: number;
    path: number[][];
    truth_heatmap: number[];
    belief: BeliefSummary;
    scorecard: Scorecard | null;
}

export interface StepResponse {
    state: number[];
    steps_remaining: number;
    phase: Phase;
    path: number[][];
    belief: BeliefSummary;
}

export interface CreateSessionRequest {
    overrides?: Record<string, unknown>;
    theta_gt?: number[];
    point_mass_belief?: boolean;
}

export interface ActionLog {
    create_request: CreateSessionRequest;
    actions: string[];
}

export const ACTIONS = ["N", "S", "E", "W", "noop"] as const;
export type Action = (typeof ACTIONS)[number];

export class PayloadError extends Error {}

function checkHeatmap(name: string, map: number[], cells: number): void {
    if (!Array.isArray(map) || map.length !== cells) {
        throw new PayloadError(
            `${name} must hold ${cells} values, got ${Array.isArray(map) ? map.length : typeof map}`,
        );
    }
    if (!map.every((v) => typeof v === "number" && Number.isFinite(v))) {
        throw new PayloadError(`${name} contains non-finite entries`);
    }
}

function checkCell(name: string, cell: number[], gridSize: number): void {
    if (!Array.isArray(cell) || cell.length !== 2) {
        throw new PayloadError(`${name} must be a [row, col] pair`);
    }
    const [r, c] = cell;
    if (!Number.isInteger(r) || !Number.isInteger(c) || r! < 0 || c! < 0 || r! >= gridSize || c! >= gridSize) {
        throw new PayloadError(`${name} cell (${r}, ${c}) outside the ${gridSize}x${gridSize} grid`);
    }
}

/** Reject malformed session payloads before anything is drawn. */
export function validateSessionView(view: SessionView): SessionView {
    const cells = view.grid_size * view.grid_size;
    if (!Number.isInteger(view.grid_size) || view.grid_size < 1) {
        throw new PayloadError(`bad grid_size ${view.grid_size}`);
    }
    checkHeatmap("truth_heatmap", view.truth_heatmap, cells);
    checkHeatmap("belief.mean_heatmap", view.belief.mean_heatmap, cells);
    checkHeatmap("belief.map_heatmap", view.belief.map_heatmap, cells);
    if (!Array.isArray(view.path) || view.path.length === 0) {
        throw new PayloadError("path must hold at least the initial state");
    }
    view.path.forEach((cell, i) => checkCell(`path[${i}]`, cell, view.grid_size));
    for (let i = 1; i < view.path.length; i++) {
        const [r0, c0] = view.path[i - 1]!;
        const [r1, c1] = view.path[i]!;
        // adjacency under the action set: one cardinal step, or in place
        // (no-ops and blocked edge moves both repeat the cell)
        if (Math.abs(r1! - r0!) + Math.abs(c1! - c0!) > 1) {
            throw new PayloadError(`path jumps from (${r0}, ${c0}) to (${r1}, ${c1})`);
        }
    }
    if (view.scorecard) {
        checkHeatmap("scorecard.theta_hat_heatmap", view.scorecard.theta_hat_heatmap, cells);
    }
    return view;
}
