/* tslint:disable */
/* eslint-disable */
export const memory: WebAssembly.Memory;
export const __wbg_cylindersim_free: (a: number, b: number) => void;
export const __wbg_rotationresult_free: (a: number, b: number) => void;
export const cylindersim_body_x: (a: number) => number;
export const cylindersim_body_y: (a: number) => number;
export const cylindersim_new: (a: number, b: number) => [number, number, number];
export const cylindersim_size: (a: number) => number;
export const cylindersim_step: (a: number, b: number) => [number, number];
export const cylindersim_time: (a: number) => number;
export const cylindersim_velocity_y: (a: number) => number;
export const cylindersim_vorticity_rgba: (a: number) => [number, number];
export const diffusion_limit: (a: number, b: number, c: number) => [number, number, number];
export const rotate_circle: (a: number, b: number) => [number, number, number];
export const rotationresult_area_drift: (a: number) => number;
export const rotationresult_rgba: (a: number) => [number, number];
export const rotationresult_size: (a: number) => number;
export const __wbindgen_externrefs: WebAssembly.Table;
export const __externref_table_dealloc: (a: number) => void;
export const __wbindgen_free: (a: number, b: number, c: number) => void;
export const __wbindgen_start: () => void;
