#pragma once

#include <string>
#include <vector>

#include "fundliq/panel.hpp"

namespace fundliq {

// One rendered output: `name` is the file name, `sidecar` the JSON written
// next to it as `name` + ".json".
struct ReportFile {
    std::string name;
    std::string content;
    std::string sidecar;
};

struct ReportBundle {
    std::vector<ReportFile> files;
};

// Renders the five study tables from an assembled panel. Regression tables
// are tidy (one row per term); performance metrics are scaled to percent per
// month at this layer only. Sidecars carry the config digest, sample counts,
// and per-fit diagnostics.
ReportBundle build_reports(const PanelDataset& panel, const PanelOptions& opts);

}  // namespace fundliq
