/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_transport_free: (a: number, b: number) => void;
export const level_heights: (a: number, b: number, c: number, d: number) => [number, number, number, number];
export const mesh_image: (a: number, b: number, c: number, d: number, e: number, f: number, g: number) => [number, number, number, number];
export const mesh_summary: (a: number, b: number, c: number, d: number) => [number, number, number, number];
export const transport_advance: (a: number, b: number) => [number, number];
export const transport_image: (a: number, b: number, c: number) => [number, number];
export const transport_new: (a: number, b: number, c: number, d: number, e: number, f: number, g: number) => [number, number, number];
export const transport_status: (a: number) => [number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_malloc: (a: number, b: number) => number;
export const __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
export const __wbindgen_start: () => void;
