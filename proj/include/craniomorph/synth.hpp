#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <vector>

#include "craniomorph/landmarks.hpp"
#include "craniomorph/tri_mesh.hpp"

namespace craniomorph {

// Recipe for a synthetic paired skull/face dataset with known ground truth:
//   skull row  = skull template + b_i V + noise
//   face row   = face template  + b_i W + noise
// with b_i zero-mean Gaussian, variances decaying geometrically.
struct SynthSpec {
    std::uint64_t seed = 0;
    int n = 50;
    int latent_dim = 8;
    double noise_sigma = 0.5;   // mm
    double latent_decay = 0.7;  // variance ratio between consecutive latents
    double skull_scale = 2.0;   // loading row norm = skull_scale * sqrt(p)
    double face_scale = 0.1;    // loading row norm = face_scale * sqrt(q)

    LandmarkSet skull_template;  // ids, midplane flags, base positions
    TriMesh face_template;       // base positions + topology

    // Optional explicit loadings (latent_dim x p / x q); generated
    // deterministically from the seed when empty.
    Eigen::MatrixXd V, W;

    void validate() const;  // throws DomainError on violations
};

struct SynthDataset {
    std::vector<LandmarkSet> skulls;
    std::vector<TriMesh> faces;  // observed (noisy) surfaces on the template topology
    Eigen::MatrixXd latents;     // n x k ground truth
    Eigen::MatrixXd V, W;        // loadings actually used
};

// Deterministic in the seed. Latents, W and face noise are drawn from
// substreams that do not depend on p, so datasets generated with different
// skull templates but one seed share their latents and faces exactly.
SynthDataset generate(const SynthSpec& spec);

// Minimum-norm least-squares coefficients (p x q) for Y ~ X B; the brute
// force comparison target for full-rank fits.
Eigen::MatrixXd oracle_regression(const Eigen::MatrixXd& X, const Eigen::MatrixXd& Y);

// Deterministic template builders used by the synthetic benchmark.
LandmarkSet make_skull_template(int n_midplane, int n_lateral);
TriMesh make_face_template(int n_vertices = 1741);

// The standard benchmark configuration (n=50, k=8, 47+198 skull points ->
// p=688, 1741 face vertices -> q=5223, 0.5 mm noise). The latent decay and
// loading scales are fixed here; tests rely on these exact values.
SynthSpec benchmark_spec(std::uint64_t seed, int n_midplane = 47, int n_lateral = 198);

}  // namespace craniomorph
