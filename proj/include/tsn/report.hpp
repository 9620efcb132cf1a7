#pragma once

#include <string>

namespace tsn {

/**
 * Turns an experiment output directory (results.json, runs/, user_stats.csv,
 * shift directories) into report.md plus CSV tables and SVG plots in the
 * same directory.  Reads only artifacts, so it can re-run on its own.
 */
void emit_report(const std::string& out_dir);

}  // namespace tsn
