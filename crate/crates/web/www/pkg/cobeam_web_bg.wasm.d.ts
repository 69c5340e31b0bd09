/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const bound_slice: (a: bigint, b: number, c: number) => [number, number, number, number];
export const power_curve: (a: bigint, b: number, c: number, d: number) => [number, number, number, number];
export const simulate: (a: number, b: number, c: number, d: number, e: bigint) => [number, number, number, number];
export const __externref_table_alloc: () => number;
export const __wbindgen_externrefs: WebAssembly.Table;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_start: () => void;
