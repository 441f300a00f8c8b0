#ifndef SCEV_H
#define SCEV_H

#include <stddef.h>
#include <stdint.h>

typedef enum ScevMode {
  SCEV_MODE_ABSOLUTE = 0,
  SCEV_MODE_RELATIVE = 1,
} ScevMode;

// Result code of every fallible call.
typedef enum ScevStatus {
  SCEV_STATUS_OK = 0,
  SCEV_STATUS_NULL_POINTER = 1,
  SCEV_STATUS_INVALID_ARGUMENT = 2,
  SCEV_STATUS_INVALID_IMAGE = 3,
  SCEV_STATUS_DIMENSION_MISMATCH = 4,
  SCEV_STATUS_THRESHOLD_OUT_OF_RANGE = 5,
  SCEV_STATUS_IMAGE_TOO_LARGE = 6,
  SCEV_STATUS_MALFORMED_STREAM = 7,
  SCEV_STATUS_INVALID_MODEL = 8,
  SCEV_STATUS_DIVISION_BY_ZERO = 9,
  SCEV_STATUS_LENGTH_MISMATCH = 10,
  SCEV_STATUS_LABEL_OUT_OF_RANGE = 11,
  SCEV_STATUS_IO = 12,
  SCEV_STATUS_PANIC = 13,
} ScevStatus;

// Ternary event image (-1 OFF, 0 none, +1 ON) with its threshold.
typedef struct ScevEventImage ScevEventImage;

// Grayscale image with intensities in [0, 1].
typedef struct ScevGrayImage ScevGrayImage;

typedef struct ScevActivity {
  double event_activity;
  double on_fraction;
  double off_fraction;
  double active_rows;
} ScevActivity;

// Size model: `ceil(width * height * channels * bits_per_channel * alpha)`.
typedef struct ScevTransmissionModel {
  uint64_t width;
  uint64_t height;
  uint64_t channels;
  uint64_t bits_per_channel;
  double alpha;
} ScevTransmissionModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or NULL. The pointer is
// valid until the next failing call on the same thread.
const char *scev_last_error(void);

// Library version as a static NUL-terminated string.
const char *scev_version(void);

// Builds a grayscale image from `width * height` row-major values in [0, 1].
enum ScevStatus scev_gray_from_f64(size_t width,
                                   size_t height,
                                   const double *pixels,
                                   struct ScevGrayImage **out);

// Builds a grayscale image from `width * height * 3` interleaved RGB bytes.
enum ScevStatus scev_gray_from_rgb8(size_t width,
                                    size_t height,
                                    const uint8_t *rgb,
                                    struct ScevGrayImage **out);

// Reads a PNG or PPM file and converts it to grayscale.
enum ScevStatus scev_gray_load(const char *path, struct ScevGrayImage **out);

// Bilinear resize to `side x side`.
enum ScevStatus scev_gray_resize(const struct ScevGrayImage *img,
                                 size_t side,
                                 struct ScevGrayImage **out);

size_t scev_gray_width(const struct ScevGrayImage *img);

size_t scev_gray_height(const struct ScevGrayImage *img);

void scev_gray_free(struct ScevGrayImage *img);

// Spatial contrast followed by thresholding.
enum ScevStatus scev_encode_events(const struct ScevGrayImage *img,
                                   enum ScevMode mode,
                                   double threshold,
                                   struct ScevEventImage **out);

// Builds an event image from `width * height` values in {-1, 0, 1}.
enum ScevStatus scev_events_from_i8(size_t width,
                                    size_t height,
                                    const int8_t *values,
                                    enum ScevMode mode,
                                    double threshold,
                                    struct ScevEventImage **out);

size_t scev_events_width(const struct ScevEventImage *ev);

size_t scev_events_height(const struct ScevEventImage *ev);

// Copies the row-major polarities into `out`, which must hold
// `width * height` values.
enum ScevStatus scev_events_copy(const struct ScevEventImage *ev, int8_t *out, size_t len);

void scev_events_free(struct ScevEventImage *ev);

enum ScevStatus scev_activity(const struct ScevEventImage *ev, struct ScevActivity *out);

// Serialises to SCEV bytes. Release the buffer with [`scev_bytes_free`].
enum ScevStatus scev_pack(const struct ScevEventImage *ev, uint8_t **out, size_t *out_len);

void scev_bytes_free(uint8_t *bytes, size_t len);

// Parses and decodes SCEV bytes.
enum ScevStatus scev_unpack(const uint8_t *bytes, size_t len, struct ScevEventImage **out);

enum ScevStatus scev_ideal_bits(struct ScevTransmissionModel model, uint64_t *out);

// `ideal_bits(rgb) / ideal_bits(sc)`.
enum ScevStatus scev_reduction_ratio(struct ScevTransmissionModel rgb,
                                     struct ScevTransmissionModel sc,
                                     double *out);

// Macro-averaged F1 over `n_classes` classes for `len` label pairs.
enum ScevStatus scev_macro_f1(const size_t *truth,
                              const size_t *pred,
                              size_t len,
                              size_t n_classes,
                              double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SCEV_H */
