/* tslint:disable */
/* eslint-disable */

export class JointDemo {
    free(): void;
    [Symbol.dispose](): void;
    classMeans(times: Float64Array): Float64Array;
    classes(): number;
    cumulativeHazards(x: number, times: Float64Array): Float64Array;
    dynamicPrediction(times: Float64Array, values: Float64Array, x: number, landmark: number, horizons: Float64Array): Float64Array;
    hazards(x: number, times: Float64Array): Float64Array;
    incidence(x: number, times: Float64Array): Float64Array;
    constructor(classes: number, hazard: string, horizon: number);
    parameterNames(): string[];
    parameters(): Float64Array;
    setParameters(theta: Float64Array): void;
}

/**
 * Outcome grid followed by latent values; cut points for thresholds.
 */
export function linkCurve(kind: string, lo: number, hi: number, eta: Float64Array, points: number): Float64Array;

/**
 * Default parameters of a link on `[lo, hi]`.
 */
export function linkDefaults(kind: string, lo: number, hi: number): Float64Array;

export function linkParameterNames(kind: string, lo: number, hi: number): string[];

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly __wbg_jointdemo_free: (a: number, b: number) => void;
    readonly jointdemo_classMeans: (a: number, b: number, c: number) => [number, number, number, number];
    readonly jointdemo_classes: (a: number) => number;
    readonly jointdemo_cumulativeHazards: (a: number, b: number, c: number, d: number) => [number, number, number, number];
    readonly jointdemo_dynamicPrediction: (a: number, b: number, c: number, d: number, e: number, f: number, g: number, h: number, i: number) => [number, number, number, number];
    readonly jointdemo_hazards: (a: number, b: number, c: number, d: number) => [number, number, number, number];
    readonly jointdemo_incidence: (a: number, b: number, c: number, d: number) => [number, number, number, number];
    readonly jointdemo_new: (a: number, b: number, c: number, d: number) => [number, number, number];
    readonly jointdemo_parameterNames: (a: number) => [number, number];
    readonly jointdemo_parameters: (a: number) => [number, number];
    readonly jointdemo_setParameters: (a: number, b: number, c: number) => [number, number];
    readonly linkCurve: (a: number, b: number, c: number, d: number, e: number, f: number, g: number) => [number, number, number, number];
    readonly linkDefaults: (a: number, b: number, c: number, d: number) => [number, number, number, number];
    readonly linkParameterNames: (a: number, b: number, c: number, d: number) => [number, number, number, number];
    readonly __wbindgen_externrefs: WebAssembly.Table;
    readonly __wbindgen_malloc: (a: number, b: number) => number;
    readonly __externref_table_dealloc: (a: number) => void;
    readonly __wbindgen_free: (a: number, b: number, c: number) => void;
    readonly __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
    readonly __externref_drop_slice: (a: number, b: number) => void;
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
