#pragma once

#include <string>

#include "craniomorph/joint_pca.hpp"
#include "craniomorph/lrr.hpp"

namespace craniomorph {

// Single-file JSON model archives with a format-version and a kind tag
// ("joint_pca" or "lrr"). Numeric round-trips are exact.
void save_model(const std::string& path, const JointPcaModel& model);
void save_model(const std::string& path, const LrrModel& model);

// Peeks at the kind tag without loading matrices.
std::string model_kind(const std::string& path);

JointPcaModel load_pca_model(const std::string& path);

// verify: recheck latent-vector unit norms and score-norm positivity (the
// parts of the coefficient factorization a corrupt file could silently
// break).
LrrModel load_lrr_model(const std::string& path, bool verify = true);

}  // namespace craniomorph
