#pragma once

// Subject-parallel kernels. Each has a serial reference twin used by the tests
// and the benchmark; the parallel versions are deterministic for any thread
// count (fixed chunking, order-fixed reductions).

#include <cstdint>
#include <span>
#include <vector>

#include "latent_itr/dataset.hpp"
#include "latent_itr/model.hpp"

namespace litr {

inline constexpr int kMaxExactSearchDim = 20;

// Caps OpenMP worker threads; values < 1 restore the runtime default.
void set_thread_count(int threads);
int thread_count();

// Hard baseline state for every subject, stored as lexicographic codes.
class LatentAssignment {
 public:
  LatentAssignment() = default;
  LatentAssignment(std::size_t n, int latent_dim) : latent_dim_(latent_dim), codes_(n, 0) {}

  std::size_t size() const noexcept { return codes_.size(); }
  int latent_dim() const noexcept { return latent_dim_; }
  LatentState state(std::size_t i) const { return LatentState::from_code(codes_[i], latent_dim_); }
  std::uint32_t code(std::size_t i) const { return codes_[i]; }
  void set(std::size_t i, const LatentState& z) { codes_[i] = z.code(); }
  void set_code(std::size_t i, std::uint32_t code) { codes_[i] = code; }
  const std::vector<std::uint32_t>& codes() const noexcept { return codes_; }

  friend bool operator==(const LatentAssignment&, const LatentAssignment&) = default;

 private:
  int latent_dim_ = 0;
  std::vector<std::uint32_t> codes_;
};

// argmin over z in {0,1}^K of the subject's unweighted pre + post loss; ties go
// to the lexicographically smallest state. Throws if K > kMaxExactSearchDim.
LatentState exact_latent_search(const ModelParams& params, const SubjectRecord& record);
LatentState exact_latent_search(const ModelParams& params, const Dataset& ds, std::size_t i);

// argmin of the pre-treatment loss only (the new-patient criterion).
LatentState exact_baseline_search(const MeasurementParams& measurement, std::span<const double> y0);

// Re-assigns every subject by exact search.
void search_sweep(const ModelParams& params, const Dataset& ds, LatentAssignment& latents);
void search_sweep_serial(const ModelParams& params, const Dataset& ds, LatentAssignment& latents);

// (1/n) sum_i w_i [pre_i + post_i].
double total_objective(const ModelParams& params, const LatentAssignment& latents,
                       const Dataset& ds);
double total_objective_serial(const ModelParams& params, const LatentAssignment& latents,
                              const Dataset& ds);

// Gradient of (1/|B|) sum_{i in B} w_i [pre_i + post_i] over the batch
// `indices`, written into tape (overwritten). Returns the batch objective.
double batch_gradient(const ModelParams& params, const Dataset& ds,
                      const LatentAssignment& latents, std::span<const std::size_t> indices,
                      GradientTape& tape);
double batch_gradient_serial(const ModelParams& params, const Dataset& ds,
                             const LatentAssignment& latents,
                             std::span<const std::size_t> indices, GradientTape& tape);

}  // namespace litr
