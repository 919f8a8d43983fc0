#pragma once

#include <string>

namespace patrol::docs {

// Cross-reference of every evaluation output against the command, config and
// expected outcome that produced it. Generated from run manifests so the
// document cannot drift from actual outputs; entries without a manifest are
// flagged incomplete. Idempotent for fixed inputs.
std::string generate_repro_index(const std::string& manifest_dir);

int cmd_repro_index(const std::string& manifest_dir, const std::string& out_path);

}  // namespace patrol::docs
