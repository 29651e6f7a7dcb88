/* tslint:disable */
/* eslint-disable */

/**
 * A self-contained training playground: generated corpus, lead-sentence
 * synthetic headlines, and a model trainable one batch of epochs at a time.
 */
export class Demo {
    free(): void;
    [Symbol.dispose](): void;
    /**
     * Scores one headline/body pair with the current parameters and
     * returns the full attention picture: both token lists, the score
     * matrix, the two weight vectors and the class probabilities. An empty
     * `synthetic` falls back to the body's lead sentence.
     */
    analyze(headline: string, body: string, synthetic: string): string;
    /**
     * The bundled examples as JSON, for the corpus browser.
     */
    corpusPreview(): string;
    /**
     * Builds the corpus and a freshly initialized model. `variant` is one
     * of diff, dot, concat, clubbed; `pooling` is avg or max.
     */
    constructor(seed: number, variant: string, pooling: string);
    /**
     * Runs `n` more epochs and returns their log lines plus run totals.
     */
    trainEpochs(n: number): string;
}

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_demo_free: (a: number, b: number) => void;
    readonly demo_analyze: (a: number, b: number, c: number, d: number, e: number, f: number, g: number) => [number, number, number, number];
    readonly demo_corpusPreview: (a: number) => [number, number];
    readonly demo_new: (a: number, b: number, c: number, d: number, e: number) => [number, number, number];
    readonly demo_trainEpochs: (a: number, b: number) => [number, number, number, number];
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
