// Shared color scale: all heatmaps in a frame are normalized together so
// the teacher can compare the truth against the robot's inference at a
// glance. Lighter cells mean higher reward.

const LOW = [28, 40, 51] as const;
const HIGH = [247, 249, 249] as const;

export interface Scale {
    min: number;
    max: number;
}

export function sharedScale(maps: number[][]): Scale {
    let min = Infinity;
    let max = -Infinity;
    for (const map of maps) {
        for (const v of map) {
            if (v < min) min = v;
            if (v > max) max = v;
        }
    }
    return { min, max };
}

/** Map a value to [0, 1] on the scale; a degenerate scale pins mid-gray. */
export function normalize(value: number, scale: Scale): number {
    if (!(scale.max > scale.min)) return 0.5;
    return (value - scale.min) / (scale.max - scale.min);
}

export function colorFor(value: number, scale: Scale): string {
    const t = normalize(value, scale);
    const ch = (i: number) => Math.round(LOW[i]! + t * (HIGH[i]! - LOW[i]!));
    return `rgb(${ch(0)}, ${ch(1)}, ${ch(2)})`;
}
