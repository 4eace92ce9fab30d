#pragma once

#include <filesystem>
#include <random>
#include <string>

#include "gazenet/model/model.hpp"

namespace gazenet::testing {

// Fresh empty directory under the system temp dir.
std::filesystem::path temp_dir(const std::string& tag);

// Small model used by gradient and property tests.
ModelConfig miniature_config();

// Random input batch matching `config`.
template <typename T>
ModelInput<T> random_input(const ModelConfig& config, std::size_t batch, std::mt19937_64& rng);

// Random aligned sample matching `config`.
preprocess::AlignedSample random_sample(const ModelConfig& config, std::mt19937_64& rng,
                                        const std::string& pid = "P", const std::string& vid = "V");

// Random samples for `participants` x `per_participant` trials, in memory.
std::vector<preprocess::AlignedSample> random_samples(const ModelConfig& config, std::size_t participants,
                                                      std::size_t per_participant, std::uint64_t seed);

// Writes samples in the preprocess output layout (samples/<pid>__<vid>/ plus
// samples.txt) under `dir`.
void write_sample_set(const std::filesystem::path& dir, const std::vector<preprocess::AlignedSample>& samples);

}  // namespace gazenet::testing
