/* tslint:disable */
/* eslint-disable */

export class Demo {
    free(): void;
    [Symbol.dispose](): void;
    /**
     * Ask a question; touched points ground "this", "these", "here".
     */
    ask(transcript: string): string;
    clear_touches(): void;
    /**
     * Current frame: `{frame_id, grid, layer, magnification, elements}`.
     */
    frame(): string;
    constructor(chart: string);
    /**
     * Double-tap at continuous pin coordinates with Gaussian spread
     * `sigma`. Returns the scored candidates and the spoken feedback.
     */
    tap(x: number, y: number, sigma: number, right_hand: boolean): string;
    /**
     * Pan ("left", "right", "up", "down") or zoom ("geometric_in",
     * "geometric_out", "semantic_in", "semantic_out"), then re-render.
     */
    view(op: string): string;
}

/**
 * Names of the built-in charts, as a JSON array.
 */
export function chart_names(): string;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_demo_free: (a: number, b: number) => void;
    readonly chart_names: () => [number, number];
    readonly demo_ask: (a: number, b: number, c: number) => [number, number];
    readonly demo_clear_touches: (a: number) => void;
    readonly demo_frame: (a: number) => [number, number];
    readonly demo_new: (a: number, b: number) => [number, number, number];
    readonly demo_tap: (a: number, b: number, c: number, d: number, e: number) => [number, number];
    readonly demo_view: (a: number, b: number, c: number) => [number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
    readonly __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
    readonly __externref_table_dealloc: (a: number) => void;
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
