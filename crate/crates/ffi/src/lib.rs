//! C interface to `nirfuse`.
//!
//! Objects are opaque handles created by `nf_*_new`/`nf_*_load`/`nf_*_from_*`
//! functions and released with the matching `nf_*_free`. Fallible calls return
//! an [`NfStatus`]; on failure a message is available from
//! [`nf_last_error_message`] on the same thread.
//!
//! Image samples cross the boundary as 8-bit values: interleaved `RGBRGB...`
//! for color images and one byte per pixel for gray planes, row-major.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::ptr;

use nirfuse::{io, metrics, run_pipeline, ColorImage, FusionConfig, FusionError, Plane};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NfStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    DimensionMismatch = 3,
    Io = 4,
    Config = 5,
    Panic = 6,
}

/// Color image with samples in `[0, 1]`.
pub struct NfColorImage(ColorImage);

/// Single-channel image with samples in `[0, 1]`.
pub struct NfPlane(Plane);

/// Fusion parameters.
pub struct NfConfig(FusionConfig);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let msg = CString::new(msg.replace('\0', " ")).expect("no interior nul");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(msg));
}

fn clear_error() {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
}

fn status_of(err: &FusionError) -> NfStatus {
    match err {
        FusionError::InvalidArgument(_) => NfStatus::InvalidArgument,
        FusionError::DimensionMismatch { .. } => NfStatus::DimensionMismatch,
        FusionError::ImageRead { .. } | FusionError::ImageWrite { .. } | FusionError::Io(_) => {
            NfStatus::Io
        }
        FusionError::Config(_) => NfStatus::Config,
    }
}

enum Failure {
    Null(&'static str),
    Invalid(String),
    Fusion(FusionError),
}

impl From<FusionError> for Failure {
    fn from(e: FusionError) -> Self {
        Failure::Fusion(e)
    }
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> NfStatus {
    clear_error();
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => NfStatus::Ok,
        Ok(Err(Failure::Null(what))) => {
            set_error(format!("{what} is null"));
            NfStatus::NullPointer
        }
        Ok(Err(Failure::Invalid(msg))) => {
            set_error(msg);
            NfStatus::InvalidArgument
        }
        Ok(Err(Failure::Fusion(e))) => {
            set_error(e.to_string());
            status_of(&e)
        }
        Err(_) => {
            set_error("internal panic".to_string());
            NfStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, what: &'static str) -> Result<&'a T, Failure> {
    p.as_ref().ok_or(Failure::Null(what))
}

unsafe fn deref_mut<'a, T>(p: *mut T, what: &'static str) -> Result<&'a mut T, Failure> {
    p.as_mut().ok_or(Failure::Null(what))
}

unsafe fn c_str<'a>(p: *const c_char, what: &'static str) -> Result<&'a str, Failure> {
    if p.is_null() {
        return Err(Failure::Null(what));
    }
    CStr::from_ptr(p)
        .to_str()
        .map_err(|_| Failure::Invalid(format!("{what} is not valid UTF-8")))
}

unsafe fn put<T>(out: *mut *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(Failure::Null("out"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

unsafe fn free<T>(p: *mut T) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

unsafe fn bytes<'a>(data: *const u8, len: usize) -> Result<&'a [u8], Failure> {
    if data.is_null() {
        return Err(Failure::Null("data"));
    }
    Ok(std::slice::from_raw_parts(data, len))
}

unsafe fn bytes_mut<'a>(data: *mut u8, len: usize) -> Result<&'a mut [u8], Failure> {
    if data.is_null() {
        return Err(Failure::Null("out"));
    }
    Ok(std::slice::from_raw_parts_mut(data, len))
}

fn pixel_count(width: usize, height: usize, channels: usize) -> Result<usize, Failure> {
    width
        .checked_mul(height)
        .and_then(|n| n.checked_mul(channels))
        .ok_or_else(|| Failure::Invalid("image size overflows".to_string()))
}

fn check_len(len: usize, want: usize) -> Result<(), Failure> {
    if len == want {
        Ok(())
    } else {
        Err(Failure::Invalid(format!(
            "buffer holds {len} bytes, expected {want}"
        )))
    }
}

/// Message describing the last failure on this thread, or null. The pointer
/// stays valid until the next `nf_*` call on the same thread.
#[no_mangle]
pub extern "C" fn nf_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static nul-terminated string.
#[no_mangle]
pub extern "C" fn nf_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Default configuration. Never null.
#[no_mangle]
pub extern "C" fn nf_config_new() -> *mut NfConfig {
    Box::into_raw(Box::new(NfConfig(FusionConfig::default())))
}

/// Parses a TOML document; missing keys take defaults.
///
/// # Safety
/// `text` must be a nul-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn nf_config_from_toml(
    text: *const c_char,
    out: *mut *mut NfConfig,
) -> NfStatus {
    guard(|| {
        let cfg = FusionConfig::from_toml_str(c_str(text, "text")?)?;
        put(out, NfConfig(cfg))
    })
}

/// Reads a TOML configuration file.
///
/// # Safety
/// `path` must be a nul-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn nf_config_load(path: *const c_char, out: *mut *mut NfConfig) -> NfStatus {
    guard(|| {
        let cfg = FusionConfig::load(PathBuf::from(c_str(path, "path")?))?;
        put(out, NfConfig(cfg))
    })
}

/// Sets a field and validates the result; on failure the field is unchanged.
unsafe fn update(cfg: *mut NfConfig, f: impl FnOnce(&mut FusionConfig)) -> NfStatus {
    guard(|| {
        let cfg = deref_mut(cfg, "config")?;
        let mut next = cfg.0.clone();
        f(&mut next);
        next.validate()?;
        cfg.0 = next;
        Ok(())
    })
}

/// # Safety
/// `cfg` must come from this library.
#[no_mangle]
pub unsafe extern "C" fn nf_config_set_patch_m(cfg: *mut NfConfig, patch_m: usize) -> NfStatus {
    update(cfg, |c| c.patch_m = patch_m)
}

/// # Safety
/// `cfg` must come from this library.
#[no_mangle]
pub unsafe extern "C" fn nf_config_set_mu_c(cfg: *mut NfConfig, mu_c: f64) -> NfStatus {
    update(cfg, |c| c.mu_c = mu_c)
}

/// # Safety
/// `cfg` must come from this library.
#[no_mangle]
pub unsafe extern "C" fn nf_config_set_mu_d(cfg: *mut NfConfig, mu_d: f64) -> NfStatus {
    update(cfg, |c| c.mu_d = mu_d)
}

/// Fixed filtering strength of the initial denoising; `h <= 0` restores the
/// automatic choice.
///
/// # Safety
/// `cfg` must come from this library.
#[no_mangle]
pub unsafe extern "C" fn nf_config_set_denoise_h(cfg: *mut NfConfig, h: f64) -> NfStatus {
    update(cfg, |c| c.nlm_initial.h = (h > 0.0).then_some(h))
}

/// # Safety
/// `cfg` must come from this library.
#[no_mangle]
pub unsafe extern "C" fn nf_config_set_max_gain(cfg: *mut NfConfig, max_gain: f64) -> NfStatus {
    update(cfg, |c| c.slope_clamp.max_gain = max_gain)
}

/// Serializes the configuration as TOML. Free the result with
/// [`nf_string_free`].
///
/// # Safety
/// `cfg` must come from this library and `out` be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn nf_config_to_toml(
    cfg: *const NfConfig,
    out: *mut *mut c_char,
) -> NfStatus {
    guard(|| {
        let cfg = deref(cfg, "config")?;
        if out.is_null() {
            return Err(Failure::Null("out"));
        }
        let text = CString::new(cfg.0.to_toml_string()).expect("toml has no nul");
        *out = text.into_raw();
        Ok(())
    })
}

/// # Safety
/// `s` must be null or a string returned by this library.
#[no_mangle]
pub unsafe extern "C" fn nf_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// # Safety
/// `cfg` must be null or come from this library.
#[no_mangle]
pub unsafe extern "C" fn nf_config_free(cfg: *mut NfConfig) {
    free(cfg)
}

/// Builds a color image from `width * height * 3` interleaved bytes.
///
/// # Safety
/// `data` must point to `len` readable bytes and `out` be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn nf_color_image_from_rgb8(
    data: *const u8,
    len: usize,
    width: usize,
    height: usize,
    out: *mut *mut NfColorImage,
) -> NfStatus {
    guard(|| {
        check_len(len, pixel_count(width, height, 3)?)?;
        let src = bytes(data, len)?;
        let img = ColorImage::from_fn(width, height, |r, c| {
            let i = 3 * (r * width + c);
            [src[i], src[i + 1], src[i + 2]].map(io::dequantize)
        })?;
        put(out, NfColorImage(img))
    })
}

/// Writes `width * height * 3` interleaved bytes into `out`.
///
/// # Safety
/// `img` must come from this library and `out` point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn nf_color_image_to_rgb8(
    img: *const NfColorImage,
    out: *mut u8,
    len: usize,
) -> NfStatus {
    guard(|| {
        let img = &deref(img, "image")?.0;
        check_len(len, pixel_count(img.width(), img.height(), 3)?)?;
        let dst = bytes_mut(out, len)?;
        for r in 0..img.height() {
            for c in 0..img.width() {
                let i = 3 * (r * img.width() + c);
                dst[i..i + 3].copy_from_slice(&img.pixel(r, c).map(io::quantize));
            }
        }
        Ok(())
    })
}

/// # Safety
/// `path` must be a nul-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn nf_color_image_load_png(
    path: *const c_char,
    out: *mut *mut NfColorImage,
) -> NfStatus {
    guard(|| {
        let img = io::load_color(c_str(path, "path")?)?;
        put(out, NfColorImage(img))
    })
}

/// # Safety
/// `img` must come from this library and `path` be a nul-terminated string.
#[no_mangle]
pub unsafe extern "C" fn nf_color_image_save_png(
    img: *const NfColorImage,
    path: *const c_char,
) -> NfStatus {
    guard(|| {
        let img = deref(img, "image")?;
        io::save_color(&img.0, c_str(path, "path")?)?;
        Ok(())
    })
}

/// Width in pixels, or 0 for a null handle.
///
/// # Safety
/// `img` must be null or come from this library.
#[no_mangle]
pub unsafe extern "C" fn nf_color_image_width(img: *const NfColorImage) -> usize {
    img.as_ref().map_or(0, |i| i.0.width())
}

/// Height in pixels, or 0 for a null handle.
///
/// # Safety
/// `img` must be null or come from this library.
#[no_mangle]
pub unsafe extern "C" fn nf_color_image_height(img: *const NfColorImage) -> usize {
    img.as_ref().map_or(0, |i| i.0.height())
}

/// # Safety
/// `img` must be null or come from this library.
#[no_mangle]
pub unsafe extern "C" fn nf_color_image_free(img: *mut NfColorImage) {
    free(img)
}

/// Builds a gray plane from `width * height` bytes.
///
/// # Safety
/// `data` must point to `len` readable bytes and `out` be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn nf_plane_from_gray8(
    data: *const u8,
    len: usize,
    width: usize,
    height: usize,
    out: *mut *mut NfPlane,
) -> NfStatus {
    guard(|| {
        check_len(len, pixel_count(width, height, 1)?)?;
        let src = bytes(data, len)?;
        let plane = Plane::new(
            width,
            height,
            src.iter().map(|&v| io::dequantize(v)).collect(),
        )?;
        put(out, NfPlane(plane))
    })
}

/// Writes `width * height` bytes into `out`.
///
/// # Safety
/// `plane` must come from this library and `out` point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn nf_plane_to_gray8(
    plane: *const NfPlane,
    out: *mut u8,
    len: usize,
) -> NfStatus {
    guard(|| {
        let plane = &deref(plane, "plane")?.0;
        check_len(len, plane.len())?;
        let dst = bytes_mut(out, len)?;
        for (d, &v) in dst.iter_mut().zip(plane.data()) {
            *d = io::quantize(v);
        }
        Ok(())
    })
}

/// Loads a PNG as gray; color files are averaged over channels.
///
/// # Safety
/// `path` must be a nul-terminated string and `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn nf_plane_load_png(
    path: *const c_char,
    out: *mut *mut NfPlane,
) -> NfStatus {
    guard(|| {
        let plane = io::load_gray(c_str(path, "path")?)?;
        put(out, NfPlane(plane))
    })
}

/// # Safety
/// `plane` must come from this library and `path` be a nul-terminated string.
#[no_mangle]
pub unsafe extern "C" fn nf_plane_save_png(plane: *const NfPlane, path: *const c_char) -> NfStatus {
    guard(|| {
        let plane = deref(plane, "plane")?;
        io::save_gray(&plane.0, c_str(path, "path")?)?;
        Ok(())
    })
}

/// # Safety
/// `plane` must be null or come from this library.
#[no_mangle]
pub unsafe extern "C" fn nf_plane_width(plane: *const NfPlane) -> usize {
    plane.as_ref().map_or(0, |p| p.0.width())
}

/// # Safety
/// `plane` must be null or come from this library.
#[no_mangle]
pub unsafe extern "C" fn nf_plane_height(plane: *const NfPlane) -> usize {
    plane.as_ref().map_or(0, |p| p.0.height())
}

/// # Safety
/// `plane` must be null or come from this library.
#[no_mangle]
pub unsafe extern "C" fn nf_plane_free(plane: *mut NfPlane) {
    free(plane)
}

/// Fuses a noisy visible image with a near-infrared plane of the same size.
/// A null `cfg` uses the defaults.
///
/// # Safety
/// Handles must come from this library and `out` be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn nf_fuse(
    vci: *const NfColorImage,
    ngi: *const NfPlane,
    cfg: *const NfConfig,
    out: *mut *mut NfColorImage,
) -> NfStatus {
    guard(|| {
        let vci = deref(vci, "vci")?;
        let ngi = deref(ngi, "ngi")?;
        let default = FusionConfig::default();
        let cfg = cfg.as_ref().map_or(&default, |c| &c.0);
        if out.is_null() {
            return Err(Failure::Null("out"));
        }
        let result = run_pipeline(&vci.0, &ngi.0, cfg)?;
        put(out, NfColorImage(result.fused))
    })
}

/// PSNR in dB between two color images of the same size.
///
/// # Safety
/// Handles must come from this library and `out` be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn nf_psnr(
    a: *const NfColorImage,
    b: *const NfColorImage,
    out: *mut f64,
) -> NfStatus {
    guard(|| {
        let (a, b) = (deref(a, "a")?, deref(b, "b")?);
        let out = deref_mut(out, "out")?;
        *out = metrics::psnr(&a.0, &b.0)?;
        Ok(())
    })
}
