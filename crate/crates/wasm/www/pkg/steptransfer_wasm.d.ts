/* tslint:disable */
/* eslint-disable */

/**
 * Simulated trial with one method's estimate.
 */
export class Run {
    private constructor();
    free(): void;
    [Symbol.dispose](): void;
    readonly estimate: Float64Array;
    readonly lambda: number;
    readonly loss: number;
    readonly selected: string;
    /**
     * First source, averaged onto the target grid.
     */
    readonly source: Float64Array;
    readonly target: Float64Array;
    readonly truth: Float64Array;
}

/**
 * Fits `values` with penalty `l1` or `l0` at level `lambda`.
 */
export function denoise(values: Float64Array, penalty: string, lambda: number): Float64Array;

/**
 * `K` times the harmonic mean of the first `K` lengths, for every `K`.
 */
export function frequency(lens: Uint32Array): Float64Array;

/**
 * Generates one trial and fits `method` (for example `l0-T-Ahat`).
 */
export function simulate(scenario: number, gamma: number, sigma: number, a: number, alpha: number, h: number, method: string, seed: number): Run;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_run_free: (a: number, b: number) => void;
    readonly denoise: (a: number, b: number, c: number, d: number, e: number) => [number, number, number, number];
    readonly frequency: (a: number, b: number) => [number, number, number, number];
    readonly run_estimate: (a: number) => [number, number];
    readonly run_lambda: (a: number) => number;
    readonly run_loss: (a: number) => number;
    readonly run_selected: (a: number) => [number, number];
    readonly run_source: (a: number) => [number, number];
    readonly run_target: (a: number) => [number, number];
    readonly run_truth: (a: number) => [number, number];
    readonly simulate: (a: number, b: number, c: number, d: number, e: number, f: number, g: number, h: number, i: number) => [number, number, number];
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
