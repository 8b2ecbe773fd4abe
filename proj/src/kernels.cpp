#include "latent_itr/kernels.hpp"

#include <omp.h>

#include <limits>

#include "latent_itr/errors.hpp"

namespace litr {

namespace {

// Subjects per gradient chunk. Independent of the thread count so the
// reduction tree, and therefore every rounding, is fixed.
constexpr std::size_t kGradientChunk = 8;

int default_threads() {
  static const int value = omp_get_max_threads();
  return value;
}

void check_search_dim(int K) {
  if (K < 1 || K > kMaxExactSearchDim) {
    throw ValidationError("exact latent search needs 1 <= K <= " +
                          std::to_string(kMaxExactSearchDim) + ", got " + std::to_string(K));
  }
}

void fill_state(std::uint32_t code, int K, Vector& z) {
  for (int k = 0; k < K; ++k) z[k] = static_cast<double>((code >> (K - 1 - k)) & 1U);
}

std::uint32_t search_code(const ModelParams& params, const SubjectRecord& record) {
  const int K = params.latent_dim();
  check_search_dim(K);
  Vector z(K);
  std::uint32_t best_code = 0;
  double best = std::numeric_limits<double>::infinity();
  const std::uint32_t states = 1U << K;
  for (std::uint32_t code = 0; code < states; ++code) {
    fill_state(code, K, z);
    const double loss = pre_treatment_loss(params.measurement, z, record.y0) +
                        post_treatment_loss(params, record, z);
    if (loss < best) {
      best = loss;
      best_code = code;
    }
  }
  return best_code;
}

// Everything that could throw inside a parallel region is checked up front.
void check_aligned(const ModelParams& params, const LatentAssignment& latents, const Dataset& ds) {
  if (latents.size() != ds.size()) {
    throw ValidationError("latent assignment is not aligned with the data");
  }
  if (latents.latent_dim() != params.latent_dim()) {
    throw ValidationError("latent assignment dimension does not match the model");
  }
  const std::size_t items = params.measurement.num_items();
  const std::size_t P = static_cast<std::size_t>(params.transition.covariate_dim);
  for (const SubjectRecord& r : ds.records) {
    if (r.y0.size() != items || r.y1.size() != items || r.x.size() != P) {
      throw ValidationError("record shape does not match the model");
    }
  }
}

}  // namespace

void set_thread_count(int threads) { omp_set_num_threads(threads >= 1 ? threads : default_threads()); }

int thread_count() { return omp_get_max_threads(); }

LatentState exact_latent_search(const ModelParams& params, const SubjectRecord& record) {
  return LatentState::from_code(search_code(params, record), params.latent_dim());
}

LatentState exact_latent_search(const ModelParams& params, const Dataset& ds, std::size_t i) {
  return exact_latent_search(params, ds.records.at(i));
}

LatentState exact_baseline_search(const MeasurementParams& measurement, std::span<const double> y0) {
  const int K = measurement.latent_dim;
  check_search_dim(K);
  if (y0.size() != measurement.num_items()) throw ValidationError("item vector length mismatch");
  Vector z(K);
  std::uint32_t best_code = 0;
  double best = std::numeric_limits<double>::infinity();
  for (std::uint32_t code = 0; code < (1U << K); ++code) {
    fill_state(code, K, z);
    const double loss = pre_treatment_loss(measurement, z, y0);
    if (loss < best) {
      best = loss;
      best_code = code;
    }
  }
  return LatentState::from_code(best_code, K);
}

void search_sweep(const ModelParams& params, const Dataset& ds, LatentAssignment& latents) {
  check_search_dim(params.latent_dim());
  check_aligned(params, latents, ds);
  const auto n = static_cast<std::ptrdiff_t>(ds.size());
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    latents.set_code(static_cast<std::size_t>(i), search_code(params, ds.records[i]));
  }
}

void search_sweep_serial(const ModelParams& params, const Dataset& ds, LatentAssignment& latents) {
  check_search_dim(params.latent_dim());
  check_aligned(params, latents, ds);
  for (std::size_t i = 0; i < ds.size(); ++i) {
    latents.set_code(i, search_code(params, ds.records[i]));
  }
}

double total_objective(const ModelParams& params, const LatentAssignment& latents,
                       const Dataset& ds) {
  const std::size_t n = ds.size();
  check_aligned(params, latents, ds);
  if (n == 0) return 0.0;
  std::vector<double> terms(n);
  const auto count = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t i = 0; i < count; ++i) {
    const SubjectRecord& r = ds.records[i];
    terms[i] = r.weight() * subject_loss(params, r, latents.state(i)).total();
  }
  double sum = 0.0;
  for (double t : terms) sum += t;
  return sum / static_cast<double>(n);
}

double total_objective_serial(const ModelParams& params, const LatentAssignment& latents,
                              const Dataset& ds) {
  const std::size_t n = ds.size();
  check_aligned(params, latents, ds);
  if (n == 0) return 0.0;
  double sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    const SubjectRecord& r = ds.records[i];
    sum += r.weight() * subject_loss(params, r, latents.state(i)).total();
  }
  return sum / static_cast<double>(n);
}

double batch_gradient(const ModelParams& params, const Dataset& ds,
                      const LatentAssignment& latents, std::span<const std::size_t> indices,
                      GradientTape& tape) {
  tape.zero();
  if (indices.empty()) return 0.0;
  check_aligned(params, latents, ds);
  for (std::size_t i : indices) {
    if (i >= ds.size()) throw ValidationError("batch index out of range");
  }
  const double inv_batch = 1.0 / static_cast<double>(indices.size());
  const std::size_t chunks = (indices.size() + kGradientChunk - 1) / kGradientChunk;
  std::vector<GradientTape> partial(chunks, GradientTape::zeros_like(params));
  std::vector<double> partial_loss(chunks, 0.0);

  const auto count = static_cast<std::ptrdiff_t>(chunks);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t c = 0; c < count; ++c) {
    const std::size_t begin = static_cast<std::size_t>(c) * kGradientChunk;
    const std::size_t end = std::min(begin + kGradientChunk, indices.size());
    for (std::size_t b = begin; b < end; ++b) {
      const std::size_t i = indices[b];
      const SubjectRecord& r = ds.records[i];
      const double scale = r.weight() * inv_batch;
      partial_loss[c] +=
          scale * accumulate_subject_gradient(params, r, latents.state(i), scale, partial[c]).total();
    }
  }

  double loss = 0.0;
  for (std::size_t c = 0; c < chunks; ++c) {
    tape += partial[c];
    loss += partial_loss[c];
  }
  return loss;
}

double batch_gradient_serial(const ModelParams& params, const Dataset& ds,
                             const LatentAssignment& latents,
                             std::span<const std::size_t> indices, GradientTape& tape) {
  tape.zero();
  if (indices.empty()) return 0.0;
  check_aligned(params, latents, ds);
  const double inv_batch = 1.0 / static_cast<double>(indices.size());
  double loss = 0.0;
  for (std::size_t i : indices) {
    const SubjectRecord& r = ds.records[i];
    const double scale = r.weight() * inv_batch;
    loss += scale * accumulate_subject_gradient(params, r, latents.state(i), scale, tape).total();
  }
  return loss;
}

}  // namespace litr
