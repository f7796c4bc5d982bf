#include "refinekit/doc/html_document.hpp"
#include "refinekit/doc/preprocess.hpp"
#include "refinekit/grpo/reward.hpp"
#include "refinekit/io.hpp"
#include "refinekit/metrics/assignment.hpp"
#include "refinekit/metrics/color.hpp"
#include "refinekit/metrics/metrics.hpp"
#include "refinekit/partition/partitioner.hpp"
#include "refinekit/perturb/perturbator.hpp"
#include "refinekit/render/image.hpp"
#include "refinekit/render/raster_provider.hpp"
#include "refinekit/rng.hpp"
#include "refinekit/similarity/embedding.hpp"

#include <benchmark/benchmark.h>

#include <filesystem>

using namespace refinekit;

namespace {

const std::string& landing_page()
{
    static const std::string text = read_file(std::filesystem::path(REFINEKIT_BENCH_CORPUS) / "01_landing.html");
    return text;
}

const doc::HtmlDocument& landing_doc()
{
    static const doc::HtmlDocument d = [] {
        doc::HtmlDocument out;
        doc::preprocess(landing_page(), "01_landing.html", out);
        return out;
    }();
    return d;
}

const render::RenderResult& landing_render()
{
    static const render::RenderResult r = render::render(landing_doc(), *std::make_unique<render::LayoutRasterProvider>());
    return r;
}

render::RasterImage noise_image(int w, int h, std::uint64_t seed)
{
    Rng rng(seed);
    render::RasterImage img(w, h);
    for (auto& p : img.pixels)
        p = static_cast<std::uint8_t>(rng.uniform_int(0, 255));
    return img;
}

} // namespace

static void BM_Ciede2000(benchmark::State& state)
{
    Rng rng(1);
    std::vector<metrics::Lab> colors;
    for (int i = 0; i < 1024; ++i)
        colors.push_back(metrics::to_lab({static_cast<std::uint8_t>(rng.uniform_int(0, 255)),
                                          static_cast<std::uint8_t>(rng.uniform_int(0, 255)),
                                          static_cast<std::uint8_t>(rng.uniform_int(0, 255))}));
    std::size_t i = 0;
    for (auto _ : state) {
        benchmark::DoNotOptimize(metrics::ciede2000(colors[i & 1023], colors[(i * 7 + 3) & 1023]));
        ++i;
    }
    state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations()));
}
BENCHMARK(BM_Ciede2000);

static void BM_CharDice(benchmark::State& state)
{
    const std::string a(static_cast<std::size_t>(state.range(0)), 'a');
    std::string b = a;
    for (std::size_t i = 0; i < b.size(); i += 3)
        b[i] = 'b';
    for (auto _ : state)
        benchmark::DoNotOptimize(metrics::char_dice(a, b));
    state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations()) * state.range(0) * 2);
}
BENCHMARK(BM_CharDice)->Arg(64)->Arg(1024);

static void BM_Assignment(benchmark::State& state)
{
    const auto n = static_cast<std::size_t>(state.range(0));
    Rng rng(2);
    std::vector<std::vector<double>> w(n, std::vector<double>(n));
    for (auto& row : w)
        for (auto& x : row)
            x = rng.uniform_real(0, 1);
    for (auto _ : state)
        benchmark::DoNotOptimize(metrics::max_weight_assignment(w));
    state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_Assignment)->RangeMultiplier(2)->Range(8, 256)->Complexity();

static void BM_ParseSerialize(benchmark::State& state)
{
    const auto& text = landing_page();
    for (auto _ : state)
        benchmark::DoNotOptimize(doc::serialize(doc::parse(text)));
    state.SetBytesProcessed(static_cast<std::int64_t>(state.iterations() * text.size()));
}
BENCHMARK(BM_ParseSerialize);

static void BM_Preprocess(benchmark::State& state)
{
    const auto& text = landing_page();
    for (auto _ : state) {
        doc::HtmlDocument out;
        benchmark::DoNotOptimize(doc::preprocess(text, "bench", out));
    }
}
BENCHMARK(BM_Preprocess);

static void BM_Compose(benchmark::State& state)
{
    const auto& d = landing_doc();
    std::uint64_t seed = 0;
    for (auto _ : state)
        benchmark::DoNotOptimize(perturb::compose(d, static_cast<int>(state.range(0)), seed++));
}
BENCHMARK(BM_Compose)->Arg(1)->Arg(3);

static void BM_RasterRender(benchmark::State& state)
{
    render::LayoutRasterProvider provider;
    const auto html = doc::serialize(landing_doc());
    for (auto _ : state)
        benchmark::DoNotOptimize(provider.render(html, {}));
}
BENCHMARK(BM_RasterRender)->Unit(benchmark::kMillisecond);

static void BM_FitPixelBudget(benchmark::State& state)
{
    const auto img = noise_image(2048, 1960, 3);
    for (auto _ : state)
        benchmark::DoNotOptimize(render::fit_pixel_budget(img));
}
BENCHMARK(BM_FitPixelBudget)->Unit(benchmark::kMillisecond);

static void BM_PngRoundTrip(benchmark::State& state)
{
    const auto& img = landing_render().image;
    for (auto _ : state)
        benchmark::DoNotOptimize(render::decode_png(render::encode_png(img)));
}
BENCHMARK(BM_PngRoundTrip)->Unit(benchmark::kMillisecond);

static void BM_FallbackEmbed(benchmark::State& state)
{
    const auto img = render::fit_pixel_budget(landing_render().image);
    for (auto _ : state)
        benchmark::DoNotOptimize(similarity::fallback_embed(img));
}
BENCHMARK(BM_FallbackEmbed)->Unit(benchmark::kMillisecond);

static void BM_EvaluatePage(benchmark::State& state)
{
    const auto page = metrics::fit_page(landing_render());
    auto gen = page;
    for (auto& b : gen.blocks)
        b.bbox.x += 4;
    similarity::FallbackEmbedder embedder;
    for (auto _ : state)
        benchmark::DoNotOptimize(metrics::evaluate(gen, page, embedder));
}
BENCHMARK(BM_EvaluatePage)->Unit(benchmark::kMillisecond);

static void BM_DifficultyScores(benchmark::State& state)
{
    Rng rng(4);
    std::vector<partition::SampleFeatures> samples(static_cast<std::size_t>(state.range(0)));
    for (std::size_t i = 0; i < samples.size(); ++i) {
        auto& f = samples[i].features;
        samples[i].sample_id = std::to_string(i);
        f.dom_depth = static_cast<double>(rng.uniform_int(3, 30));
        f.tag_diversity = static_cast<double>(rng.uniform_int(3, 40));
        f.inline_style_count = static_cast<double>(rng.uniform_int(0, 200));
        f.script_density = rng.uniform_real(0, 2);
        f.token_count = static_cast<double>(rng.uniform_int(100, 20000));
        f.block_count = static_cast<double>(rng.uniform_int(1, 300));
    }
    for (auto _ : state)
        benchmark::DoNotOptimize(partition::difficulty_scores(samples));
    state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_DifficultyScores)->RangeMultiplier(10)->Range(100, 20000)->Complexity();

static void BM_GroupAdvantagesAndLoss(benchmark::State& state)
{
    const auto g = static_cast<std::size_t>(state.range(0));
    Rng rng(5);
    std::vector<double> rewards(g), ratios(g);
    for (std::size_t i = 0; i < g; ++i) {
        rewards[i] = grpo::composite_reward(rng.coin(0.9), rng.uniform_real(0, 1), rng.uniform_real(0, 1)).total;
        ratios[i] = grpo::policy_ratio(rng.uniform_real(-0.3, 0.3), 0);
    }
    for (auto _ : state)
        benchmark::DoNotOptimize(grpo::grpo_loss(ratios, grpo::group_advantages(rewards)));
}
BENCHMARK(BM_GroupAdvantagesAndLoss)->Arg(8)->Arg(64);

BENCHMARK_MAIN();
