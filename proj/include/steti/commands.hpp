#pragma once

#include "steti/config.hpp"

namespace steti::cli {

struct LoadedData {
    std::vector<data::MissionRecord> records;
    std::vector<data::FundingSeries> funding;  // deflated to constant dollars
    double observation_date = 0.0;
};

LoadedData load_data(const RunConfig& config);

int cmd_ingest(const RunConfig& config);
int cmd_steti_fit(const RunConfig& config);
int cmd_train(const RunConfig& config);
int cmd_tune(const RunConfig& config);
int cmd_benchmark(const RunConfig& config);
int cmd_scenario(const RunConfig& config);

}  // namespace steti::cli
