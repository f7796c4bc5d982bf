#include "support.hpp"

#include "refinekit/doc/preprocess.hpp"
#include "refinekit/io.hpp"
#include "refinekit/perturb/perturbator.hpp"
#include "refinekit/render/image.hpp"
#include "refinekit/render/raster_provider.hpp"

#include <algorithm>
#include <atomic>
#include <stdexcept>
#include <unistd.h>

namespace refinekit::testkit {

std::filesystem::path corpus_dir() { return std::filesystem::path(REFINEKIT_TEST_FIXTURES) / "corpus"; }

const std::vector<perturb::CorpusDocument>& corpus()
{
    static const std::vector<perturb::CorpusDocument> docs = [] {
        std::vector<std::filesystem::path> files;
        for (const auto& e : std::filesystem::directory_iterator(corpus_dir()))
            if (e.path().extension() == ".html")
                files.push_back(e.path());
        std::sort(files.begin(), files.end());
        std::vector<perturb::CorpusDocument> out;
        for (const auto& f : files) {
            perturb::CorpusDocument d;
            d.id = f.stem().string();
            auto report = doc::preprocess(read_file(f), f.filename().string(), d.doc);
            if (report.rejected)
                throw std::runtime_error("fixture rejected: " + f.string() + ": " + report.reason);
            out.push_back(std::move(d));
        }
        return out;
    }();
    return docs;
}

std::string read_fixture(const std::string& name) { return read_file(std::filesystem::path(REFINEKIT_TEST_FIXTURES) / name); }

TempDir::TempDir(const std::string& tag)
{
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("refinekit-" + tag + "-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
}

TempDir::~TempDir()
{
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
}

render::FixtureRenderProvider& fixture_renderer()
{
    static render::FixtureRenderProvider provider(REFINEKIT_TEST_RENDER_STORE, std::make_shared<render::LayoutRasterProvider>());
    return provider;
}

std::string minimal_page(const std::string& body) { return "<!DOCTYPE html>\n<html><head></head><body>" + body + "</body></html>"; }

TrainingSetup training_setup(std::size_t n, std::uint64_t seed, int k)
{
    const auto& docs = corpus();
    if (n > docs.size())
        throw std::invalid_argument("training_setup: corpus has only " + std::to_string(docs.size()) + " documents");
    TrainingSetup out;
    for (std::size_t i = 0; i < n; ++i) {
        const auto& item = docs[i];
        out.targets.push_back({item.id, render::fit_pixel_budget(render::render(item.doc, fixture_renderer()).image)});
        auto c = perturb::compose(item.doc, k, seed + i);
        grpo::ScriptedPolicy::Draft d;
        d.code = doc::serialize(c.doc);
        d.edits = c.edits;
        out.drafts[item.id] = std::move(d);
    }
    return out;
}

} // namespace refinekit::testkit
