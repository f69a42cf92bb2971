/* tslint:disable */
/* eslint-disable */

/**
 * RK4 characteristic from `(0, u0, p0)` as `(t, x, u, H)` rows; `x` is
 * unwrapped so the path stays continuous.
 */
export function characteristic(name: string, eps: number, coupling: number, u0: number, p0: number, horizon: number): Float64Array;

/**
 * Converged branches from `(0, u0)` to `target` as `(p0, U(T))` pairs,
 * sorted by `p0`.
 */
export function shoot_branches(name: string, eps: number, coupling: number, u0: number, horizon: number, target: number): Float64Array;

/**
 * `h_{0,u0}(., T)` on the `m` grid nodes, followed by the calibrated curve
 * to `probe` as `(t, x)` pairs.
 */
export function solve_field(name: string, eps: number, coupling: number, u0: number, horizon: number, m: number, dt: number, probe: number): Float64Array;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly characteristic: (a: number, b: number, c: number, d: number, e: number, f: number, g: number) => [number, number, number, number];
    readonly shoot_branches: (a: number, b: number, c: number, d: number, e: number, f: number, g: number) => [number, number, number, number];
    readonly solve_field: (a: number, b: number, c: number, d: number, e: number, f: number, g: number, h: number, i: number) => [number, number, number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
    readonly __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
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
