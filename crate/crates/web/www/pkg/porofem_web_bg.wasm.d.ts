/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_compressioncurve_free: (a: number, b: number) => void;
export const __wbg_pressurefield_free: (a: number, b: number) => void;
export const cantileverPressure: (a: number, b: number) => [number, number, number];
export const compressionCurve: (a: number, b: number) => [number, number, number];
export const compressioncurve_analytic: (a: number) => [number, number];
export const compressioncurve_cells: (a: number) => number;
export const compressioncurve_rmse: (a: number) => number;
export const compressioncurve_simulated: (a: number) => [number, number];
export const compressioncurve_times: (a: number) => [number, number];
export const manufacturedPressure: (a: number, b: number) => [number, number, number];
export const pressurefield_oscillation: (a: number) => number;
export const pressurefield_pressure: (a: number) => [number, number];
export const pressurefield_time: (a: number) => number;
export const pressurefield_triangles: (a: number) => [number, number];
export const pressurefield_vertices: (a: number) => [number, number];
export const __wbindgen_externrefs: WebAssembly.Table;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_start: () => void;
