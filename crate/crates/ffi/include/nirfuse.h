/* Generated by cbindgen. Do not edit. */

#ifndef NIRFUSE_H
#define NIRFUSE_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result code of every fallible call.
typedef enum NfStatus {
  NF_STATUS_OK = 0,
  NF_STATUS_NULL_POINTER = 1,
  NF_STATUS_INVALID_ARGUMENT = 2,
  NF_STATUS_DIMENSION_MISMATCH = 3,
  NF_STATUS_IO = 4,
  NF_STATUS_CONFIG = 5,
  NF_STATUS_PANIC = 6,
} NfStatus;

// Color image with samples in `[0, 1]`.
typedef struct NfColorImage NfColorImage;

// Fusion parameters.
typedef struct NfConfig NfConfig;

// Single-channel image with samples in `[0, 1]`.
typedef struct NfPlane NfPlane;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message describing the last failure on this thread, or null. The pointer
// stays valid until the next `nf_*` call on the same thread.
const char *nf_last_error_message(void);

// Library version as a static nul-terminated string.
const char *nf_version(void);

// Default configuration. Never null.
struct NfConfig *nf_config_new(void);

// Parses a TOML document; missing keys take defaults.
//
// # Safety
// `text` must be a nul-terminated string and `out` a valid pointer.
enum NfStatus nf_config_from_toml(const char *text, struct NfConfig **out);

// Reads a TOML configuration file.
//
// # Safety
// `path` must be a nul-terminated string and `out` a valid pointer.
enum NfStatus nf_config_load(const char *path, struct NfConfig **out);

// # Safety
// `cfg` must come from this library.
enum NfStatus nf_config_set_patch_m(struct NfConfig *cfg, size_t patch_m);

// # Safety
// `cfg` must come from this library.
enum NfStatus nf_config_set_mu_c(struct NfConfig *cfg, double mu_c);

// # Safety
// `cfg` must come from this library.
enum NfStatus nf_config_set_mu_d(struct NfConfig *cfg, double mu_d);

// Fixed filtering strength of the initial denoising; `h <= 0` restores the
// automatic choice.
//
// # Safety
// `cfg` must come from this library.
enum NfStatus nf_config_set_denoise_h(struct NfConfig *cfg, double h);

// # Safety
// `cfg` must come from this library.
enum NfStatus nf_config_set_max_gain(struct NfConfig *cfg, double max_gain);

// Serializes the configuration as TOML. Free the result with
// [`nf_string_free`].
//
// # Safety
// `cfg` must come from this library and `out` be a valid pointer.
enum NfStatus nf_config_to_toml(const struct NfConfig *cfg, char **out);

// # Safety
// `s` must be null or a string returned by this library.
void nf_string_free(char *s);

// # Safety
// `cfg` must be null or come from this library.
void nf_config_free(struct NfConfig *cfg);

// Builds a color image from `width * height * 3` interleaved bytes.
//
// # Safety
// `data` must point to `len` readable bytes and `out` be a valid pointer.
enum NfStatus nf_color_image_from_rgb8(const uint8_t *data,
                                       size_t len,
                                       size_t width,
                                       size_t height,
                                       struct NfColorImage **out);

// Writes `width * height * 3` interleaved bytes into `out`.
//
// # Safety
// `img` must come from this library and `out` point to `len` writable bytes.
enum NfStatus nf_color_image_to_rgb8(const struct NfColorImage *img, uint8_t *out, size_t len);

// # Safety
// `path` must be a nul-terminated string and `out` a valid pointer.
enum NfStatus nf_color_image_load_png(const char *path, struct NfColorImage **out);

// # Safety
// `img` must come from this library and `path` be a nul-terminated string.
enum NfStatus nf_color_image_save_png(const struct NfColorImage *img, const char *path);

// Width in pixels, or 0 for a null handle.
//
// # Safety
// `img` must be null or come from this library.
size_t nf_color_image_width(const struct NfColorImage *img);

// Height in pixels, or 0 for a null handle.
//
// # Safety
// `img` must be null or come from this library.
size_t nf_color_image_height(const struct NfColorImage *img);

// # Safety
// `img` must be null or come from this library.
void nf_color_image_free(struct NfColorImage *img);

// Builds a gray plane from `width * height` bytes.
//
// # Safety
// `data` must point to `len` readable bytes and `out` be a valid pointer.
enum NfStatus nf_plane_from_gray8(const uint8_t *data,
                                  size_t len,
                                  size_t width,
                                  size_t height,
                                  struct NfPlane **out);

// Writes `width * height` bytes into `out`.
//
// # Safety
// `plane` must come from this library and `out` point to `len` writable bytes.
enum NfStatus nf_plane_to_gray8(const struct NfPlane *plane, uint8_t *out, size_t len);

// Loads a PNG as gray; color files are averaged over channels.
//
// # Safety
// `path` must be a nul-terminated string and `out` a valid pointer.
enum NfStatus nf_plane_load_png(const char *path, struct NfPlane **out);

// # Safety
// `plane` must come from this library and `path` be a nul-terminated string.
enum NfStatus nf_plane_save_png(const struct NfPlane *plane, const char *path);

// # Safety
// `plane` must be null or come from this library.
size_t nf_plane_width(const struct NfPlane *plane);

// # Safety
// `plane` must be null or come from this library.
size_t nf_plane_height(const struct NfPlane *plane);

// # Safety
// `plane` must be null or come from this library.
void nf_plane_free(struct NfPlane *plane);

// Fuses a noisy visible image with a near-infrared plane of the same size.
// A null `cfg` uses the defaults.
//
// # Safety
// Handles must come from this library and `out` be a valid pointer.
enum NfStatus nf_fuse(const struct NfColorImage *vci,
                      const struct NfPlane *ngi,
                      const struct NfConfig *cfg,
                      struct NfColorImage **out);

// PSNR in dB between two color images of the same size.
//
// # Safety
// Handles must come from this library and `out` be a valid pointer.
enum NfStatus nf_psnr(const struct NfColorImage *a, const struct NfColorImage *b, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* NIRFUSE_H */
