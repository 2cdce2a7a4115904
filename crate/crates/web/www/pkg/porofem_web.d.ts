/* tslint:disable */
/* eslint-disable */

/**
 * Simulated and analytic normalized radial displacement.
 */
export class CompressionCurve {
    private constructor();
    free(): void;
    [Symbol.dispose](): void;
    readonly analytic: Float64Array;
    readonly cells: number;
    readonly rmse: number;
    readonly simulated: Float64Array;
    readonly times: Float64Array;
}

/**
 * Piecewise-constant pressure on a triangle mesh.
 */
export class PressureField {
    private constructor();
    free(): void;
    [Symbol.dispose](): void;
    /**
     * Largest neighbour jump relative to the pressure range.
     */
    readonly oscillation: number;
    /**
     * One value per triangle.
     */
    readonly pressure: Float64Array;
    readonly time: number;
    /**
     * Three vertex indices per triangle.
     */
    readonly triangles: Uint32Array;
    /**
     * `x0, y0, x1, y1, ...`
     */
    readonly vertices: Float64Array;
}

/**
 * Pressure of the locking-prone cantilever after five steps.
 */
export function cantileverPressure(n: number, delta: number): PressureField;

/**
 * Radial displacement of the compressed cylinder; `simulated` holds
 * `(t, u/a)` pairs, `analytic` matches `times`.
 */
export function compressionCurve(rings: number, delta: number): CompressionCurve;

/**
 * Pressure of the manufactured solution at `t = 0.25` on an `n x n` mesh.
 */
export function manufacturedPressure(n: number, delta: number): PressureField;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_compressioncurve_free: (a: number, b: number) => void;
    readonly __wbg_pressurefield_free: (a: number, b: number) => void;
    readonly cantileverPressure: (a: number, b: number) => [number, number, number];
    readonly compressionCurve: (a: number, b: number) => [number, number, number];
    readonly compressioncurve_analytic: (a: number) => [number, number];
    readonly compressioncurve_cells: (a: number) => number;
    readonly compressioncurve_rmse: (a: number) => number;
    readonly compressioncurve_simulated: (a: number) => [number, number];
    readonly compressioncurve_times: (a: number) => [number, number];
    readonly manufacturedPressure: (a: number, b: number) => [number, number, number];
    readonly pressurefield_oscillation: (a: number) => number;
    readonly pressurefield_pressure: (a: number) => [number, number];
    readonly pressurefield_time: (a: number) => number;
    readonly pressurefield_triangles: (a: number) => [number, number];
    readonly pressurefield_vertices: (a: number) => [number, number];
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
