/* tslint:disable */
/* eslint-disable */

/**
 * Detector output: heat (0–255), mask (0/255) and a JSON summary.
 */
export class Analysis {
    private constructor();
    free(): void;
    [Symbol.dispose](): void;
    readonly heat: Uint8Array;
    readonly mask: Uint8Array;
    readonly summary: string;
}

/**
 * A generated forgery: 8-bit gray pixels and the tampered region.
 */
export class Sample {
    private constructor();
    free(): void;
    [Symbol.dispose](): void;
    readonly image: Uint8Array;
    readonly size: number;
    readonly truth: Uint8Array;
}

/**
 * Runs the detector on RGBA pixels. `truth` may be empty; when given
 * (one byte per pixel, nonzero = tampered) the summary includes metrics.
 */
export function analyze(rgba: Uint8Array, width: number, height: number, suspicion_threshold: number, truth: Uint8Array): Analysis;

/**
 * Min–max stretched preview of level-1 band matrix `index` (0–11, real and
 * imaginary parts alternating). The result is half the input size,
 * rounded up.
 */
export function band_preview(rgba: Uint8Array, width: number, height: number, index: number): Uint8Array;

/**
 * Textured `size`² image with a disk forged by `mode` ("denoise", "blur"
 * or "telea-fill") after adding noise of standard deviation `sigma`.
 */
export function synthesize(size: number, mode: string, sigma: number, seed: number): Sample;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_analysis_free: (a: number, b: number) => void;
    readonly __wbg_sample_free: (a: number, b: number) => void;
    readonly analysis_heat: (a: number) => [number, number];
    readonly analysis_mask: (a: number) => [number, number];
    readonly analysis_summary: (a: number) => [number, number];
    readonly analyze: (a: number, b: number, c: number, d: number, e: number, f: number, g: number) => [number, number, number];
    readonly band_preview: (a: number, b: number, c: number, d: number, e: number) => [number, number, number, number];
    readonly sample_image: (a: number) => [number, number];
    readonly sample_size: (a: number) => number;
    readonly sample_truth: (a: number) => [number, number];
    readonly synthesize: (a: number, b: number, c: number, d: number, e: number) => [number, number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
    readonly __externref_table_dealloc: (a: number) => void;
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
