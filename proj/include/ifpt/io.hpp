#pragma once

#include <filesystem>
#include <initializer_list>
#include <string>
#include <vector>

#include <json.hpp>

#include "ifpt/barrier.hpp"
#include "ifpt/calibration.hpp"
#include "ifpt/montecarlo.hpp"

namespace ifpt::io {

using json = nlohmann::json;

/// Throws InvalidParameter when a required key is missing or an unknown
/// key is present (archived configs must not silently change meaning).
void check_keys(const json& obj, std::initializer_list<const char*> required,
                std::initializer_list<const char*> optional, const std::string& context);

SurvivalModel survival_from_json(const json& j);
json survival_to_json(const SurvivalModel& model);
InitialDensity density_from_json(const json& j);
KillingKernel kernel_from_json(const json& j);
GridPtr grid_from_json(const json& j);

/// 17 significant digits, enough to round-trip a double exactly.
std::string format_full(double v);

void write_barrier_csv(const std::filesystem::path& path, const BarrierSolution& solution);
void write_snapshots(const std::filesystem::path& dir, const BarrierSolution& solution);
void write_survival_estimate_csv(const std::filesystem::path& path, const SurvivalEstimate& estimate);
void write_default_times_csv(const std::filesystem::path& path,
                             const std::vector<DefaultTimeSample>& samples);

std::vector<CdsQuote> read_quotes_csv(const std::filesystem::path& path);
DiscountCurve read_discount_csv(const std::filesystem::path& path);
void read_observed_path_csv(const std::filesystem::path& path, std::vector<double>& times,
                            std::vector<double>& prices);

} // namespace ifpt::io
