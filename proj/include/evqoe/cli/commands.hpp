#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "evqoe/cli/config.hpp"
#include "evqoe/synth.hpp"

namespace evqoe::cli {

using Artifacts = std::vector<std::filesystem::path>;

/// Each command reads its inputs from files, writes under <out>/<stage>/ and returns the
/// artifacts written. Failures are thrown.
Artifacts cmd_ingest(const Config& config);
Artifacts cmd_metrics(const Config& config);
Artifacts cmd_fit_service(const Config& config);
Artifacts cmd_gapfill(const Config& config);
Artifacts cmd_forecast(const Config& config);
Artifacts cmd_simulate(const Config& config);
Artifacts cmd_synth(const Config& config);

/// Stage names in pipeline order.
const std::vector<std::string>& pipeline_stages();

/// Throws ArgumentError/IoError naming the missing key or path before a stage runs.
void validate_inputs(const Config& config, const std::string& stage);

struct StageOutcome {
    std::string stage;
    bool ok = false;
    Artifacts artifacts;
    std::string error_type;
    std::string message;
};

/// Runs one stage; a failure writes <out>/<stage>/error.json instead of throwing.
StageOutcome run_stage(const std::string& stage, const Config& config);

/// Runs every stage in order, skipping the rest after a failure, then writes
/// <out>/manifest.json. Returns the process exit code (0 iff all stages succeeded).
int cmd_pipeline(const Config& config, std::vector<StageOutcome>* outcomes = nullptr);

/// Synthetic-data configuration: the reference config with `synth.*` and `site.<id>.*` overrides.
synth::SynthConfig synth_config_from(const Config& config);

}  // namespace evqoe::cli
