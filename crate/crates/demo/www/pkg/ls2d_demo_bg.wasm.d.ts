/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_scattering_free: (a: number, b: number) => void;
export const hankel: (a: number) => [number, number, number, number];
export const proxy_error: (a: number, b: number, c: number) => [number, number, number];
export const scattering_imag: (a: number) => [number, number];
export const scattering_millis: (a: number) => number;
export const scattering_n: (a: number) => number;
export const scattering_ranks: (a: number) => [number, number];
export const scattering_real: (a: number) => [number, number];
export const scattering_residual: (a: number) => number;
export const solve: (a: number, b: number, c: number, d: number, e: number) => [number, number, number];
export const __externref_table_alloc: () => number;
export const __wbindgen_externrefs: WebAssembly.Table;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_malloc: (a: number, b: number) => number;
export const __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
export const __wbindgen_start: () => void;
