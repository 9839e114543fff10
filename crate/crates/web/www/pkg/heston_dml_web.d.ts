/* tslint:disable */
/* eslint-disable */

/**
 * `[b0, b1, b2, b3, l1, l2, rms]`, then the input points and the fitted
 * grid as `n_points, (tau, rate)*, (tau, rate)*`.
 */
export function fit_curve(text: string, n_grid: number): Float64Array;

/**
 * Pairs `m, iv`; `iv` is NaN where no volatility matches the price.
 */
export function implied_smile(kappa: number, theta: number, sigma: number, rho: number, v0: number, tau: number, r: number, m_lo: number, m_hi: number, n: number): Float64Array;

/**
 * `[p_hat, d_m, d_tau, d_r, d_kappa, d_v0, d_theta, d_sigma, d_rho]`.
 */
export function price_greeks(kappa: number, theta: number, sigma: number, rho: number, v0: number, m: number, tau: number, r: number): Float64Array;

export function sample_par_yields(): string;

export type InitInput = RequestInfo | URL | Response | BufferSource | WebAssembly.Module;

export interface InitOutput {
    readonly memory: WebAssembly.Memory;
    readonly fit_curve: (a: number, b: number, c: number) => [number, number, number, number];
    readonly implied_smile: (a: number, b: number, c: number, d: number, e: number, f: number, g: number, h: number, i: number, j: number) => [number, number, number, number];
    readonly price_greeks: (a: number, b: number, c: number, d: number, e: number, f: number, g: number, h: number) => [number, number, number, number];
    readonly sample_par_yields: () => [number, number];
    readonly __externref_table_alloc: () => number;
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
