/* tslint:disable */
/* eslint-disable */

/**
 * The falling disk of the validation case on an `n × n` periodic box.
 */
export class CylinderSim {
    free(): void;
    [Symbol.dispose](): void;
    body_x(): number;
    body_y(): number;
    constructor(n: number, body_density: number);
    size(): number;
    /**
     * Advances `steps` steps.
     */
    step(steps: number): void;
    time(): number;
    velocity_y(): number;
    /**
     * Vorticity with isolines as RGBA rows, top row first.
     */
    vorticity_rgba(): Uint8Array;
}

/**
 * Outcome of rotating a circle once around the box centre.
 */
export class RotationResult {
    private constructor();
    free(): void;
    [Symbol.dispose](): void;
    /**
     * Relative change of the enclosed area.
     */
    area_drift(): number;
    /**
     * The final level set as RGBA, top row first.
     */
    rgba(): Uint8Array;
    size(): number;
}

/**
 * Largest stable time step `h²/(2·dim·ν)` on a unit box with `n` cells
 * per axis.
 */
export function diffusion_limit(n: number, dim: number, nu: number): number;

/**
 * Transports a circle of radius 0.2 through one full revolution in
 * `steps` semi-Lagrangian steps on an `n × n` grid.
 */
export function rotate_circle(n: number, steps: number): RotationResult;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_cylindersim_free: (a: number, b: number) => void;
    readonly __wbg_rotationresult_free: (a: number, b: number) => void;
    readonly cylindersim_body_x: (a: number) => number;
    readonly cylindersim_body_y: (a: number) => number;
    readonly cylindersim_new: (a: number, b: number) => [number, number, number];
    readonly cylindersim_size: (a: number) => number;
    readonly cylindersim_step: (a: number, b: number) => [number, number];
    readonly cylindersim_time: (a: number) => number;
    readonly cylindersim_velocity_y: (a: number) => number;
    readonly cylindersim_vorticity_rgba: (a: number) => [number, number];
    readonly diffusion_limit: (a: number, b: number, c: number) => [number, number, number];
    readonly rotate_circle: (a: number, b: number) => [number, number, number];
    readonly rotationresult_area_drift: (a: number) => number;
    readonly rotationresult_rgba: (a: number) => [number, number];
    readonly rotationresult_size: (a: number) => number;
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __externref_table_dealloc: (a: number) => void;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
    readonly __wbindgen_start: () => void;
}

export type SyncInitInput = BufferSource | WebAssembly.Module;

/**
 * Instantiates the given `module`, which can either be bytes or
 * a precompiled `WebAssembly.Module`.
 *
 * @param {{ module: SyncInitInput }} module - Passing `SyncInitInput` directly is deprecated.
 *
 * @returns {InitOutput}
 */
export function initSync(module: { module: SyncInitInput } | SyncInitInput): InitOutput;

/**
 * If `module_or_path` is {RequestInfo} or {URL}, makes a request and
 * for everything else, calls `WebAssembly.instantiate` directly.
 *
 * @param {{ module_or_path: InitInput | Promise<InitInput> }} module_or_path - Passing `InitInput` directly is deprecated.
 *
 * @returns {Promise<InitOutput>}
 */
export default function __wbg_init (module_or_path?: { module_or_path: InitInput | Promise<InitInput> } | InitInput | Promise<InitInput>): Promise<InitOutput>;
