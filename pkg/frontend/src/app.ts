// DOM wiring for the teaching playground. All state lives in the last
// service payload; this file only forwards inputs and paints scenes.

import { DeployResponse, HttpClient, ServiceClient, ServiceRejection } from "./client.js";
import { renderScene, Scene } from "./scene.js";
import { replaySession, scorecardsMatch } from "./replay.js";
import { Action, ActionLog, PayloadError, SessionView } from "./types.js";

const KEY_ACTIONS: Record<string, Action> = {
    ArrowUp: "N",
    ArrowDown: "S",
    ArrowRight: "E",
    ArrowLeft: "W",
    " ": "noop",
};

const CELL = 36;
const POLL_MS = 3000;

class App {
    private view: SessionView | null = null;
    private inFlight = false;
    private actions: string[] = [];
    private createRequest: Record<string, unknown> = {};
    private lastScorecard: DeployResponse | null = null;
    private pollTimer: number | undefined;

    constructor(
        private readonly client: ServiceClient,
        private readonly root: Document,
    ) {}

    start(): void {
        this.root.getElementById("new-session")!.addEventListener("click", () => {
            void this.newSession();
        });
        this.root.getElementById("deploy")!.addEventListener("click", () => {
            void this.deploy();
        });
        this.root.getElementById("replay")!.addEventListener("click", () => {
            void this.replay();
        });
        this.root.getElementById("blind")!.addEventListener("change", () => {
            this.paint();
        });
        for (const action of ["N", "S", "E", "W", "noop"] as Action[]) {
            this.root.getElementById(`act-${action}`)!.addEventListener("click", () => {
                void this.submitAction(action);
            });
        }
        this.root.addEventListener("keydown", (event) => {
            const action = KEY_ACTIONS[(event as KeyboardEvent).key];
            if (action) {
                event.preventDefault();
                void this.submitAction(action);
            }
        });
        this.pollTimer = window.setInterval(() => void this.poll(), POLL_MS);
        void this.newSession();
    }

    private banner(message: string | null): void {
        const el = this.root.getElementById("banner")!;
        el.textContent = message ?? "";
        el.classList.toggle("visible", message !== null);
    }

    private async guarded(run: () => Promise<void>): Promise<void> {
        if (this.inFlight) return; // at most one in-flight mutation
        this.inFlight = true;
        try {
            await run();
            this.banner(null);
        } catch (err) {
            if (err instanceof ServiceRejection || err instanceof PayloadError) {
                this.banner(err.message);
            } else {
                this.banner(`request failed: ${String(err)}`);
            }
        } finally {
            this.inFlight = false;
        }
    }

    private async newSession(): Promise<void> {
        await this.guarded(async () => {
            const seedText = (this.root.getElementById("seed") as HTMLInputElement).value.trim();
            const overrides: Record<string, unknown> = {};
            if (seedText) overrides["seed"] = Number(seedText);
            this.createRequest = { overrides };
            this.view = await this.client.createSession(this.createRequest);
            this.actions = [];
            this.lastScorecard = null;
            this.paint();
        });
    }

    private async submitAction(action: Action): Promise<void> {
        if (!this.view || this.view.phase !== "learning") return; // input disabled
        await this.guarded(async () => {
            const step = await this.client.step(this.view!.id, action, crypto.randomUUID());
            this.actions.push(action);
            this.view = {
                ...this.view!,
                phase: step.phase,
                steps_remaining: step.steps_remaining,
                path: step.path,
                belief: step.belief,
            };
            this.paint();
        });
    }

    private async deploy(): Promise<void> {
        if (!this.view || this.view.phase !== "deployed") return;
        await this.guarded(async () => {
            const card = await this.client.deploy(this.view!.id, crypto.randomUUID());
            this.lastScorecard = card;
            this.view = await this.client.getSession(this.view!.id);
            this.paint();
        });
    }

    private async replay(): Promise<void> {
        if (!this.lastScorecard) {
            this.banner("finish a session before replaying its log");
            return;
        }
        await this.guarded(async () => {
            const log: ActionLog = {
                create_request: this.createRequest,
                actions: [...this.actions],
            };
            const result = await replaySession(this.client, log);
            const ok = scorecardsMatch(result.scorecard, this.lastScorecard!);
            this.root.getElementById("replay-result")!.textContent = ok
                ? "replay reproduced the scorecard exactly"
                : "replay DIVERGED from the recorded scorecard";
        });
    }

    private async poll(): Promise<void> {
        // pull fallback: refresh the view when no mutation is in flight
        if (!this.view || this.inFlight) return;
        try {
            this.view = await this.client.getSession(this.view.id);
            this.paint();
        } catch {
            // transient; the next interaction will surface a banner
        }
    }

    private paint(): void {
        if (!this.view) return;
        const blind = (this.root.getElementById("blind") as HTMLInputElement).checked;
        let scene: Scene;
        try {
            scene = renderScene(this.view, { blindTeacher: blind });
        } catch (err) {
            // malformed payload: error banner, no partial render
            this.banner(err instanceof Error ? err.message : String(err));
            return;
        }
        this.paintScene(scene);
    }

    private paintScene(scene: Scene): void {
        const mapsRoot = this.root.getElementById("maps")!;
        mapsRoot.textContent = "";
        for (const map of scene.maps) {
            const holder = this.root.createElement("figure");
            const caption = this.root.createElement("figcaption");
            caption.textContent = map.title;
            const canvas = this.root.createElement("canvas");
            canvas.width = canvas.height = scene.gridSize * CELL;
            const ctx = canvas.getContext("2d")!;
            for (let s = 0; s < map.colors.length; s++) {
                const r = Math.floor(s / scene.gridSize);
                const c = s % scene.gridSize;
                ctx.fillStyle = map.colors[s]!;
                ctx.fillRect(c * CELL, r * CELL, CELL - 1, CELL - 1);
            }
            this.drawTrail(ctx, scene.path, "#e67e22", 4);
            if (scene.rollout) this.drawTrail(ctx, scene.rollout, "#27ae60", 2);
            holder.append(canvas, caption);
            mapsRoot.append(holder);
        }

        this.root.getElementById("phase")!.textContent =
            `phase: ${scene.phase} | steps remaining: ${scene.stepsRemaining}`;
        (this.root.getElementById("deploy") as HTMLButtonElement).disabled =
            scene.phase !== "deployed";
        const code = this.root.getElementById("scorecard")!;
        if (scene.scorecard) {
            code.textContent =
                `regret ${scene.scorecard.regret.toFixed(4)} | ` +
                `KL ${scene.scorecard.kl.toFixed(4)} | ` +
                `reward L2 ${scene.scorecard.reward_l2.toFixed(4)}`;
        } else {
            code.textContent = "";
        }
        this.root.getElementById("log")!.textContent = JSON.stringify({
            create_request: this.createRequest,
            actions: this.actions,
        });
    }

    private drawTrail(
        ctx: CanvasRenderingContext2D,
        cells: number[][],
        color: string,
        width: number,
    ): void {
        ctx.strokeStyle = color;
        ctx.lineWidth = width;
        ctx.beginPath();
        cells.forEach(([r, c], i) => {
            const x = c! * CELL + CELL / 2;
            const y = r! * CELL + CELL / 2;
            if (i === 0) ctx.moveTo(x, y);
            else ctx.lineTo(x, y);
        });
        ctx.stroke();
        const last = cells[cells.length - 1]!;
        ctx.fillStyle = color;
        ctx.beginPath();
        ctx.arc(last[1]! * CELL + CELL / 2, last[0]! * CELL + CELL / 2, width + 3, 0, 2 * Math.PI);
        ctx.fill();
    }
}

export function bootstrap(): void {
    new App(new HttpClient(""), document).start();
}

if (typeof document !== "undefined" && document.getElementById("maps")) {
    bootstrap();
}
