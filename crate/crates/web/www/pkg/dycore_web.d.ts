/* tslint:disable */
/* eslint-disable */

export class Transport {
    free(): void;
    [Symbol.dispose](): void;
    advance(steps: number): void;
    /**
     * RGBA pixels of the field on a `width` × `height` longitude-latitude raster, north up.
     */
    image(width: number, height: number): Uint8Array;
    /**
     * `shape` is "bell" or "cylinder"; `scheme` is "flux" or "advective".
     */
    constructor(n: number, shape: string, scheme: string, monotone: boolean, steps_per_revolution: number);
    /**
     * One-line status: step, elapsed days, Courant number, range and mass change.
     */
    status(): string;
}

/**
 * Level heights z_0..z_m (m) for a column standing on `surface`; `gamma` ≤ 0 means uniform.
 */
export function level_heights(layers: number, top: number, gamma: number, surface: number): Float64Array;

/**
 * RGBA raster of a mesh quantity ("detj", "surface" or "panel") for a Cn mesh.
 */
export function mesh_image(n: number, orography: string, quantity: string, width: number, height: number): Uint8Array;

export function mesh_summary(n: number, layers: number, orography: string): string;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_transport_free: (a: number, b: number) => void;
    readonly level_heights: (a: number, b: number, c: number, d: number) => [number, number, number, number];
    readonly mesh_image: (a: number, b: number, c: number, d: number, e: number, f: number, g: number) => [number, number, number, number];
    readonly mesh_summary: (a: number, b: number, c: number, d: number) => [number, number, number, number];
    readonly transport_advance: (a: number, b: number) => [number, number];
    readonly transport_image: (a: number, b: number, c: number) => [number, number];
    readonly transport_new: (a: number, b: number, c: number, d: number, e: number, f: number, g: number) => [number, number, number];
    readonly transport_status: (a: number) => [number, number];
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
