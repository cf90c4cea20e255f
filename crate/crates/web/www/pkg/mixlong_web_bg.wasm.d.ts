/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_jointdemo_free: (a: number, b: number) => void;
export const jointdemo_classMeans: (a: number, b: number, c: number) => [number, number, number, number];
export const jointdemo_classes: (a: number) => number;
export const jointdemo_cumulativeHazards: (a: number, b: number, c: number, d: number) => [number, number, number, number];
export const jointdemo_dynamicPrediction: (a: number, b: number, c: number, d: number, e: number, f: number, g: number, h: number, i: number) => [number, number, number, number];
export const jointdemo_hazards: (a: number, b: number, c: number, d: number) => [number, number, number, number];
export const jointdemo_incidence: (a: number, b: number, c: number, d: number) => [number, number, number, number];
export const jointdemo_new: (a: number, b: number, c: number, d: number) => [number, number, number];
export const jointdemo_parameterNames: (a: number) => [number, number];
export const jointdemo_parameters: (a: number) => [number, number];
export const jointdemo_setParameters: (a: number, b: number, c: number) => [number, number];
export const linkCurve: (a: number, b: number, c: number, d: number, e: number, f: number, g: number) => [number, number, number, number];
export const linkDefaults: (a: number, b: number, c: number, d: number) => [number, number, number, number];
export const linkParameterNames: (a: number, b: number, c: number, d: number) => [number, number, number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __wbindgen_malloc: (a: number, b: number) => number;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_realloc: (a: number, b: number, c: number, d: number) => number;
export const __externref_drop_slice: (a: number, b: number) => void;
export const __wbindgen_start: () => void;
