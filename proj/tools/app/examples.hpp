#pragma once

#include <filesystem>

namespace turnkit::app {

/// Writes the demo job into `dir`: stepped_shaft.stl (a three-step shaft
/// with a 1 mm groove), PGM tool profiles, tools.json, an empty catalog and
/// two configs, stepped_shaft.json and stepped_shaft_no_tools.json.
void write_example_job(const std::filesystem::path& dir);

}  // namespace turnkit::app
