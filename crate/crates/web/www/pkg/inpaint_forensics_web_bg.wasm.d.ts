/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_analysis_free: (a: number, b: number) => void;
export const __wbg_sample_free: (a: number, b: number) => void;
export const analysis_heat: (a: number) => [number, number];
export const analysis_mask: (a: number) => [number, number];
export const analysis_summary: (a: number) => [number, number];
export const analyze: (a: number, b: number, c: number, d: number, e: number, f: number, g: number) => [number, number, number];
export const band_preview: (a: number, b: number, c: number, d: number, e: number) => [number, number, number, number];
export const sample_image: (a: number) => [number, number];
export const sample_size: (a: number) => number;
export const sample_truth: (a: number) => [number, number];
export const synthesize: (a: number, b: number, c: number, d: number, e: number) => [number, number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_malloc: (a: number, b: number) => number;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
export const __wbindgen_start: () => void;
