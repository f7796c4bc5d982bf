#pragma once

#include "refinekit/doc/html_document.hpp"
#include "refinekit/grpo/epoch.hpp"
#include "refinekit/grpo/policy.hpp"
#include "refinekit/perturb/forge.hpp"
#include "refinekit/render/fixture_provider.hpp"
#include "refinekit/render/provider.hpp"

#include <filesystem>
#include <map>
#include <memory>
#include <string>
#include <vector>

namespace refinekit::testkit {

std::filesystem::path corpus_dir();

// Every fixture document, preprocessed, ordered by file name.
const std::vector<perturb::CorpusDocument>& corpus();

std::string read_fixture(const std::string& name);

class TempDir {
public:
    explicit TempDir(const std::string& tag = "t");
    ~TempDir();
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

// Fixture provider over the shared render store of the test build. Entries
// missing from the store are recorded from the built-in raster renderer.
render::FixtureRenderProvider& fixture_renderer();

std::string minimal_page(const std::string& body);

// Training targets from the first n corpus documents, each with a draft made
// of k composed edits.
struct TrainingSetup {
    std::vector<grpo::TrainingTarget> targets;
    std::map<std::string, grpo::ScriptedPolicy::Draft> drafts;
};
TrainingSetup training_setup(std::size_t n, std::uint64_t seed, int k = 2);

} // namespace refinekit::testkit
