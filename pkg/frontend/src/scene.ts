// Pure scene construction: SessionView in, drawable scene out. The painter
// in app.ts only copies a Scene onto canvases, so everything on screen is a
// deterministic function of the last payload.

import { colorFor, Scale, sharedScale } from "./colors.js";
import { Scorecard, SessionView, validateSessionView } from "./types.js";

export interface HeatmapScene {
    title: string;
    colors: string[]; // row-major, grid_size^2 cells
}

export interface Scene {
    gridSize: number;
    maps: HeatmapScene[];
    path: number[][];
    rollout: number[][] | null;
    phase: string;
    stepsRemaining: number;
    scorecard: Scorecard | null;
    scale: Scale;
}

export interface SceneOptions {
    blindTeacher?: boolean; // hide the ground-truth map
}

export function renderScene(view: SessionView, options: SceneOptions = {}): Scene {
    validateSessionView(view);
    const maps: { title: string; values: number[] }[] = [];
    if (!options.blindTeacher) {
        maps.push({ title: "ground truth (yours)", values: view.truth_heatmap });
    }
    maps.push({ title: "robot MAP estimate", values: view.belief.map_heatmap });
    maps.push({ title: "robot mean estimate", values: view.belief.mean_heatmap });

    const scale = sharedScale(maps.map((m) => m.values));
    return {
        gridSize: view.grid_size,
        maps: maps.map((m) => ({
            title: m.title + (view.belief.preview && m.title !== "ground truth (yours)" ? " (preview)" : ""),
            colors: m.values.map((v) => colorFor(v, scale)),
        })),
        path: view.path.map((cell) => [...cell]),
        rollout: view.scorecard ? view.scorecard.rollout.map((cell) => [...cell]) : null,
        phase: view.phase,
        stepsRemaining: view.steps_remaining,
        scorecard: view.scorecard,
        scale,
    };
}
