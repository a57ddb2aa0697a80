/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_run_free: (a: number, b: number) => void;
export const denoise: (a: number, b: number, c: number, d: number, e: number) => [number, number, number, number];
export const frequency: (a: number, b: number) => [number, number, number, number];
export const run_estimate: (a: number) => [number, number];
export const run_lambda: (a: number) => number;
export const run_loss: (a: number) => number;
export const run_selected: (a: number) => [number, number];
export const run_source: (a: number) => [number, number];
export const run_target: (a: number) => [number, number];
export const run_truth: (a: number) => [number, number];
export const simulate: (a: number, b: number, c: number, d: number, e: number, f: number, g: number, h: number, i: number) => [number, number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __wbindgen_malloc: (a: number, b: number) => number;
export const __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_start: () => void;
