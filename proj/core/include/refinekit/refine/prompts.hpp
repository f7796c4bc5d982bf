#pragma once

#include <string>
#include <string_view>

namespace refinekit::refine {

// Version tag of the bundled prompt templates.
std::string_view prompt_version();

std::string_view system_prompt();

// Instructions for producing a page from the target screenshot alone.
std::string initial_prompt();

// Instructions for revising `code` given the target screenshot and the
// render of `code` (both attached as images by the policy).
std::string refinement_prompt(std::string_view code);

} // namespace refinekit::refine
