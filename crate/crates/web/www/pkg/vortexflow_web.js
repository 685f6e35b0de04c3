/* @ts-self-types="./vortexflow_web.d.ts" */

/**
 * The falling disk of the validation case on an `n × n` periodic box.
 */
export class CylinderSim {
    __destroy_into_raw() {
        const ptr = this.__wbg_ptr;
        this.__wbg_ptr = 0;
        CylinderSimFinalization.unregister(this);
        return ptr;
    }
    free() {
        const ptr = this.__destroy_into_raw();
        wasm.__wbg_cylindersim_free(ptr, 0);
    }
    /**
     * @returns {number}
     */
    body_x() {
        const ret = wasm.cylindersim_body_x(this.__wbg_ptr);
        return ret;
    }
    /**
     * @returns {number}
     */
    body_y() {
        const ret = wasm.cylindersim_body_y(this.__wbg_ptr);
        return ret;
    }
    /**
     * @param {number} n
     * @param {number} body_density
     */
    constructor(n, body_density) {
        const ret = wasm.cylindersim_new(n, body_density);
        if (ret[2]) {
            throw takeFromExternrefTable0(ret[1]);
        }
        this.__wbg_ptr = ret[0];
        CylinderSimFinalization.register(this, this.__wbg_ptr, this);
        return this;
    }
    /**
     * @returns {number}
     */
    size() {
        const ret = wasm.cylindersim_size(this.__wbg_ptr);
        return ret >>> 0;
    }
    /**
     * Advances `steps` steps.
     * @param {number} steps
     */
    step(steps) {
        const ret = wasm.cylindersim_step(this.__wbg_ptr, steps);
        if (ret[1]) {
            throw takeFromExternrefTable0(ret[0]);
        }
    }
    /**
     * @returns {number}
     */
    time() {
        const ret = wasm.cylindersim_time(this.__wbg_ptr);
        return ret;
    }
    /**
     * @returns {number}
     */
    velocity_y() {
        const ret = wasm.cylindersim_velocity_y(this.__wbg_ptr);
        return ret;
    }
    /**
     * Vorticity with isolines as RGBA rows, top row first.
     * @returns {Uint8Array}
     */
    vorticity_rgba() {
        const ret = wasm.cylindersim_vorticity_rgba(this.__wbg_ptr);
        var v1 = getArrayU8FromWasm0(ret[0], ret[1]).slice();
        wasm.__wbindgen_free(ret[0], ret[1] * 1, 1);
        return v1;
    }
}
if (Symbol.dispose) CylinderSim.prototype[Symbol.dispose] = CylinderSim.prototype.free;

/**
 * Outcome of rotating a circle once around the box centre.
 */
export class RotationResult {
    static __wrap(ptr) {
        const obj = Object.create(RotationResult.prototype);
        obj.__wbg_ptr = ptr;
        RotationResultFinalization.register(obj, obj.__wbg_ptr, obj);
        return obj;
    }
    __destroy_into_raw() {
        const ptr = this.__wbg_ptr;
        this.__wbg_ptr = 0;
        RotationResultFinalization.unregister(this);
        return ptr;
    }
    free() {
        const ptr = this.__destroy_into_raw();
        wasm.__wbg_rotationresult_free(ptr, 0);
    }
    /**
     * Relative change of the enclosed area.
     * @returns {number}
     */
    area_drift() {
        const ret = wasm.rotationresult_area_drift(this.__wbg_ptr);
        return ret;
    }
    /**
     * The final level set as RGBA, top row first.
     * @returns {Uint8Array}
     */
    rgba() {
        const ret = wasm.rotationresult_rgba(this.__wbg_ptr);
        var v1 = getArrayU8FromWasm0(ret[0], ret[1]).slice();
        wasm.__wbindgen_free(ret[0], ret[1] * 1, 1);
        return v1;
    }
    /**
     * @returns {number}
     */
    size() {
        const ret = wasm.rotationresult_size(this.__wbg_ptr);
        return ret >>> 0;
    }
}
if (Symbol.dispose) RotationResult.prototype[Symbol.dispose] = RotationResult.prototype.free;

/**
 * Largest stable time step `h²/(2·dim·ν)` on a unit box with `n` cells
 * per axis.
 * @param {number} n
 * @param {number} dim
 * @param {number} nu
 * @returns {number}
 */
export function diffusion_limit(n, dim, nu) {
    const ret = wasm.diffusion_limit(n, dim, nu);
    if (ret[2]) {
        throw takeFromExternrefTable0(ret[1]);
    }
    return ret[0];
}

/**
 * Transports a circle of radius 0.2 through one full revolution in
 * `steps` semi-Lagrangian steps on an `n × n` grid.
 * @param {number} n
 * @param {number} steps
 * @returns {RotationResult}
 */
export function rotate_circle(n, steps) {
    const ret = wasm.rotate_circle(n, steps);
    if (ret[2]) {
        throw takeFromExternrefTable0(ret[1]);
    }
    return RotationResult.__wrap(ret[0]);
}
function __wbg_get_imports() {
    const import0 = {
        __proto__: null,
        __wbg_Error_92b29b0548f8b746: function(arg0, arg1) {
            const ret = Error(getStringFromWasm0(arg0, arg1));
            return ret;
        },
        __wbg___wbindgen_throw_344f42d3211c4765: function(arg0, arg1) {
            throw new Error(getStringFromWasm0(arg0, arg1));
        },
        __wbindgen_init_externref_table: function() {
            const table = wasm.__wbindgen_externrefs;
            const offset = table.grow(4);
            table.set(0, undefined);
            table.set(offset + 0, undefined);
            table.set(offset + 1, null);
            table.set(offset + 2, true);
            table.set(offset + 3, false);
        },
    };
    return {
        __proto__: null,
        "./vortexflow_web_bg.js": import0,
    };
}

const CylinderSimFinalization = (typeof FinalizationRegistry === 'undefined')
    ? { register: () => {}, unregister: () => {} }
    : new FinalizationRegistry(ptr => wasm.__wbg_cylindersim_free(ptr, 1));
const RotationResultFinalization = (typeof FinalizationRegistry === 'undefined')
    ? { register: () => {}, unregister: () => {} }
    : new FinalizationRegistry(ptr => wasm.__wbg_rotationresult_free(ptr, 1));

function getArrayU8FromWasm0(ptr, len) {
    ptr = ptr >>> 0;
    return getUint8ArrayMemory0().subarray(ptr / 1, ptr / 1 + len);
}

function getStringFromWasm0(ptr, len) {
    return decodeText(ptr >>> 0, len);
}

let cachedUint8ArrayMemory0 = null;
function getUint8ArrayMemory0() {
    if (cachedUint8ArrayMemory0 === null || cachedUint8ArrayMemory0.byteLength === 0) {
        cachedUint8ArrayMemory0 = new Uint8Array(wasm.memory.buffer);
    }
    return cachedUint8ArrayMemory0;
}

function takeFromExternrefTable0(idx) {
    const value = wasm.__wbindgen_externrefs.get(idx);
    wasm.__externref_table_dealloc(idx);
    return value;
}

let cachedTextDecoder = new TextDecoder('utf-8', { ignoreBOM: true, fatal: true });
cachedTextDecoder.decode();
const MAX_SAFARI_DECODE_BYTES = 2146435072;
let numBytesDecoded = 0;
function decodeText(ptr, len) {
    numBytesDecoded += len;
    if (numBytesDecoded >= MAX_SAFARI_DECODE_BYTES) {
        cachedTextDecoder = new TextDecoder('utf-8', { ignoreBOM: true, fatal: true });
        cachedTextDecoder.decode();
        numBytesDecoded = len;
    }
    return cachedTextDecoder.decode(getUint8ArrayMemory0().subarray(ptr, ptr + len));
}

let wasmModule, wasmInstance, wasm;
function __wbg_finalize_init(instance, module) {
    wasmInstance = instance;
    wasm = instance.exports;
    wasmModule = module;
    cachedUint8ArrayMemory0 = null;
    wasm.__wbindgen_start();
    return wasm;
}

async function __wbg_load(module, imports) {
    if (typeof Response === 'function' && module instanceof Response) {
        if (typeof WebAssembly.instantiateStreaming === 'function') {
            try {
                return await WebAssembly.instantiateStreaming(module, imports);
            } catch (e) {
                const validResponse = module.ok && expectedResponseType(module.type);

                if (validResponse && module.headers.get('Content-Type') !== 'application/wasm') {
                    console.warn("`WebAssembly.instantiateStreaming` failed because your server does not serve Wasm with `application/wasm` MIME type. Falling back to `WebAssembly.instantiate` which is slower. Original error:\n", e);

                } else { throw e; }
            }
        }

        const bytes = await module.arrayBuffer();
        return await WebAssembly.instantiate(bytes, imports);
    } else {
        const instance = await WebAssembly.instantiate(module, imports);

        if (instance instanceof WebAssembly.Instance) {
            return { instance, module };
        } else {
            return instance;
        }
    }

    function expectedResponseType(type) {
        switch (type) {
            case 'basic': case 'cors': case 'default': return true;
        }
        return false;
    }
}

function initSync(module) {
    if (wasm !== undefined) return wasm;


    if (module !== undefined) {
        if (Object.getPrototypeOf(module) === Object.prototype) {
            ({module} = module)
        } else {
            console.warn('using deprecated parameters for `initSync()`; pass a single object instead')
        }
    }

    const imports = __wbg_get_imports();
    if (!(module instanceof WebAssembly.Module)) {
        module = new WebAssembly.Module(module);
    }
    const instance = new WebAssembly.Instance(module, imports);
    return __wbg_finalize_init(instance, module);
}

async function __wbg_init(module_or_path) {
    if (wasm !== undefined) return wasm;


    if (module_or_path !== undefined) {
        if (Object.getPrototypeOf(module_or_path) === Object.prototype) {
            ({module_or_path} = module_or_path)
        } else {
            console.warn('using deprecated parameters for the initialization function; pass a single object instead')
        }
    }

    if (module_or_path === undefined) {
        module_or_path = new URL('vortexflow_web_bg.wasm', import.meta.url);
    }
    const imports = __wbg_get_imports();

    if (typeof module_or_path === 'string' || (typeof Request === 'function' && module_or_path instanceof Request) || (typeof URL === 'function' && module_or_path instanceof URL)) {
        module_or_path = fetch(module_or_path);
    }

    const { instance, module } = await __wbg_load(await module_or_path, imports);

    return __wbg_finalize_init(instance, module);
}

export { initSync, __wbg_init as default };
