/* tslint:disable */
/* eslint-disable */

/**
 * Total field of a direct solve on an `n x n` grid, row-major.
 */
export class Scattering {
    private constructor();
    free(): void;
    [Symbol.dispose](): void;
    imag(): Float64Array;
    ranks(): Uint32Array;
    real(): Float64Array;
    readonly millis: number;
    readonly n: number;
    readonly residual: number;
}

/**
 * `H0(x)` as `[re, im]`.
 */
export function hankel(x: number): Float64Array;

/**
 * Relative error of the proxy-ring basis for a `side x side` box spanning
 * `wavelengths` wavelengths.
 */
export function proxy_error(side: number, wavelengths: number, width: number): number;

/**
 * Solves for a plane wave along `x` hitting `potential` (gaussian, lens,
 * cavity or crystal) and returns the total field on the grid.
 */
export function solve(potential: string, kappa: number, n: number, eps: number): Scattering;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_scattering_free: (a: number, b: number) => void;
    readonly hankel: (a: number) => [number, number, number, number];
    readonly proxy_error: (a: number, b: number, c: number) => [number, number, number];
    readonly scattering_imag: (a: number) => [number, number];
    readonly scattering_millis: (a: number) => number;
    readonly scattering_n: (a: number) => number;
    readonly scattering_ranks: (a: number) => [number, number];
    readonly scattering_real: (a: number) => [number, number];
    readonly scattering_residual: (a: number) => number;
    readonly solve: (a: number, b: number, c: number, d: number, e: number) => [number, number, number];
    readonly __externref_table_alloc: () => number;
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __externref_table_dealloc: (a: number) => void;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
    readonly __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
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
