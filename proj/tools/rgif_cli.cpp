// Command-line front end for the robust guided image filtering library.
//
// Exit codes: 0 success, 1 usage error, 2 I/O error, 3 solver
// non-convergence (output is still written).

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "rgif/rgif.hpp"

namespace {

constexpr const char* kParamKeys[] = {
    "alpha",   "r_d",       "r_s",        "sigma_d",    "sigma_s",
    "sigma_g", "lambda_d",  "lambda_s",   "beta",       "tau",
    "lambda0", "lambda_min", "lambda_max", "pcg_tol",   "pcg_maxit",
    "irls_tol", "irls_maxit"};

struct CommonOpts {
  std::string config_path;
  std::string trace_path;
  std::string lambda_map_path;
  bool deterministic = false;
  int threads = 0;
  bool print_params = false;
  std::map<std::string, std::string> overrides;
};

void add_common_options(CLI::App* cmd, CommonOpts& opts) {
  cmd->add_option("--config", opts.config_path,
                  "flat key = value parameter file");
  cmd->add_option("--trace", opts.trace_path,
                  "write per-iteration CSV (iteration,mad,energy,pcg_iters)");
  cmd->add_option("--lambda-map", opts.lambda_map_path,
                  "write the final lambda map (.pfm, or scaled 16-bit)");
  cmd->add_flag("--deterministic", opts.deterministic,
                "bit-identical output regardless of --threads");
  cmd->add_option("--threads", opts.threads, "worker thread cap");
  cmd->add_flag("--print-params", opts.print_params,
                "print the resolved parameters and exit");
  for (const char* key : kParamKeys) {
    cmd->add_option_function<std::string>(
        std::string("--") + key,
        [&opts, key](const std::string& v) { opts.overrides[key] = v; },
        std::string("override parameter ") + key);
  }
}

void apply_config_file(rgif::FilterParams& p, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw rgif::IoError("cannot open config: " + path);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      if (line.find_first_not_of(" \t\r") != std::string::npos)
        throw rgif::ContractError("config line " + std::to_string(lineno) +
                                  ": expected key = value");
      continue;
    }
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    rgif::set_param(p, trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
  }
}

// Preset < config file < command-line override.
rgif::FilterParams resolve_params(const rgif::FilterParams& base,
                                  const CommonOpts& opts) {
  rgif::FilterParams p = base;
  if (!opts.config_path.empty()) apply_config_file(p, opts.config_path);
  for (const auto& [key, value] : opts.overrides)
    rgif::set_param(p, key, value);
  p.validate();
  return p;
}

void setup_threads(const CommonOpts& opts) {
  int threads = opts.threads;
  if (threads <= 0) {
    if (const char* env = std::getenv("RGIF_THREADS"))
      threads = std::atoi(env);
  }
  if (threads > 0) rgif::set_num_threads(threads);
}

void write_trace(const rgif::IrlsTrace& trace, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw rgif::IoError("cannot write trace: " + path);
  out << "iteration,mad,energy,pcg_iters\n";
  for (int i = 0; i < trace.iterates; ++i) {
    out << (i + 1) << "," << trace.mad_sequence[i] << ",";
    if (i < static_cast<int>(trace.energy_sequence.size()))
      out << trace.energy_sequence[i];
    out << "," << trace.pcg_iters[i] << "\n";
  }
}

void write_lambda_map(const rgif::LambdaMap& lam, const std::string& path) {
  rgif::Image img(lam.width, lam.height, 1);
  img.data = lam.values;
  if (rgif::detail::lower_ext(path) == "pfm") {
    rgif::save_image(img, path);
    return;
  }
  // Integer formats: scale affinely to 16 bits, record the map in a sidecar.
  auto [lo_it, hi_it] = std::minmax_element(img.data.begin(), img.data.end());
  const double lo = *lo_it, hi = *hi_it;
  const double scale = hi > lo ? 65535.0 / (hi - lo) : 0.0;
  for (double& v : img.data) v = (v - lo) * scale;
  img.value_range = {0.0, 65535.0};
  rgif::save_image(img, path);
  std::ofstream side(path + ".scale.txt");
  side << "lo = " << lo << "\nhi = " << hi << "\n"
       << "value = lo + stored / 65535 * (hi - lo)\n";
}

int finish(const rgif::PipelineResult& result, const std::string& out_path,
           const CommonOpts& opts) {
  rgif::save_image(result.output, out_path);
  if (!opts.trace_path.empty()) write_trace(result.trace, opts.trace_path);
  if (!opts.lambda_map_path.empty()) {
    if (!result.lambda_map)
      std::cerr << "rgif: no lambda map produced by this pipeline\n";
    else
      write_lambda_map(*result.lambda_map, opts.lambda_map_path);
  }
  if (!result.trace.converged || !result.trace.pcg_all_converged) {
    std::cerr << "rgif: solver did not converge within the iteration budget; "
                 "output written anyway\n";
    return 3;
  }
  return 0;
}

void require_path(const std::string& path, const char* what) {
  if (path.empty())
    throw rgif::ContractError(std::string("missing required path: ") + what);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Robust guided image filtering"};
  app.require_subcommand(1);

  struct {
    CommonOpts common;
    std::string input, guidance, output;
  } filter_args;
  struct {
    CommonOpts common;
    std::string depth, color, output;
    int factor = 8;
  } depth_args;
  struct {
    CommonOpts common;
    std::string noflash, flash, output;
  } flash_args;
  struct {
    CommonOpts common;
    std::string input, output;
    double boost = 3.0;
  } detail_args;
  struct {
    CommonOpts common;
    std::string input, output;
    std::vector<double> gains{1.0, 1.0, 1.0};
    double compression = 0.0;
  } tonemap_args;
  struct {
    CommonOpts common;
    std::string input, output;
  } texture_args, dejpeg_args;
  struct {
    std::string a, b;
  } metrics_args;

  auto* filter = app.add_subcommand("filter", "generic guided filter");
  filter->add_option("input", filter_args.input, "target image");
  filter->add_option("output", filter_args.output, "output image");
  filter->add_option("--guidance", filter_args.guidance,
                     "guidance image (defaults to the target itself)");
  add_common_options(filter, filter_args.common);

  auto* depth = app.add_subcommand("depth-upsample",
                                   "guided depth map upsampling");
  depth->add_option("depth", depth_args.depth, "low-resolution depth map");
  depth->add_option("color", depth_args.color, "high-resolution color image");
  depth->add_option("output", depth_args.output, "output depth map");
  depth->add_option("--factor", depth_args.factor, "upsampling factor");
  add_common_options(depth, depth_args.common);

  auto* flash = app.add_subcommand("flash-noflash", "flash/no-flash filtering");
  flash->add_option("noflash", flash_args.noflash, "no-flash (target) image");
  flash->add_option("flash", flash_args.flash, "flash (guidance) image");
  flash->add_option("output", flash_args.output, "output image");
  add_common_options(flash, flash_args.common);

  auto* detail = app.add_subcommand("detail-enhance", "detail enhancement");
  detail->add_option("input", detail_args.input, "input image");
  detail->add_option("output", detail_args.output, "output image");
  detail->add_option("--boost", detail_args.boost, "detail gain");
  add_common_options(detail, detail_args.common);

  auto* tonemap = app.add_subcommand("tonemap", "multi-scale HDR tone mapping");
  tonemap->add_option("input", tonemap_args.input, "HDR input (.pfm)");
  tonemap->add_option("output", tonemap_args.output, "LDR output image");
  tonemap->add_option("--gains", tonemap_args.gains, "three detail layer gains")
      ->expected(3);
  tonemap->add_option("--compression", tonemap_args.compression,
                      "base-range divisor (<= 0 = auto, base range log 100)");
  add_common_options(tonemap, tonemap_args.common);

  auto* texture = app.add_subcommand("texture-smooth", "texture smoothing");
  texture->add_option("input", texture_args.input, "input image");
  texture->add_option("output", texture_args.output, "output image");
  add_common_options(texture, texture_args.common);

  auto* dejpeg = app.add_subcommand(
      "dejpeg", "clip-art compression artifact removal");
  dejpeg->add_option("input", dejpeg_args.input, "input image");
  dejpeg->add_option("output", dejpeg_args.output, "output image");
  add_common_options(dejpeg, dejpeg_args.common);

  auto* metrics = app.add_subcommand("metrics", "mean absolute error of a pair");
  metrics->add_option("a", metrics_args.a, "first image")->required();
  metrics->add_option("b", metrics_args.b, "second image")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    if (metrics->parsed()) {
      const rgif::Image a = rgif::load_image(metrics_args.a);
      const rgif::Image b = rgif::load_image(metrics_args.b);
      std::cout << "mae," << rgif::mean_abs(a, b) << "\n";
      return 0;
    }

    if (filter->parsed()) {
      const auto p = resolve_params(rgif::FilterParams{}, filter_args.common);
      if (filter_args.common.print_params) {
        std::cout << rgif::params_to_text(p);
        return 0;
      }
      setup_threads(filter_args.common);
      require_path(filter_args.input, "input");
      require_path(filter_args.output, "output");
      const rgif::Image input = rgif::load_image(filter_args.input);
      auto [target, info] = rgif::normalize(input);
      rgif::Image guide = target;
      if (!filter_args.guidance.empty())
        guide = rgif::normalize(rgif::load_image(filter_args.guidance)).first;
      const bool record = !filter_args.common.trace_path.empty();
      auto [out, trace] = rgif::irls_filter(target, guide, p, target, record);
      rgif::PipelineResult result{rgif::denormalize(out, info),
                                  std::move(trace), std::nullopt};
      return finish(result, filter_args.output, filter_args.common);
    }

    if (depth->parsed()) {
      const auto p = resolve_params(
          rgif::preset(rgif::Application::kDepthUpsample, depth_args.factor),
          depth_args.common);
      if (depth_args.common.print_params) {
        std::cout << rgif::params_to_text(p);
        return 0;
      }
      setup_threads(depth_args.common);
      require_path(depth_args.depth, "depth");
      require_path(depth_args.color, "color");
      require_path(depth_args.output, "output");
      const rgif::Image lowres = rgif::load_image(depth_args.depth);
      const rgif::Image color = rgif::load_image(depth_args.color);
      const bool record = !depth_args.common.trace_path.empty();
      const auto result =
          rgif::depth_upsample(lowres, color, depth_args.factor, p, record);
      return finish(result, depth_args.output, depth_args.common);
    }

    if (flash->parsed()) {
      const auto p = resolve_params(
          rgif::preset(rgif::Application::kFlashNoFlash), flash_args.common);
      if (flash_args.common.print_params) {
        std::cout << rgif::params_to_text(p);
        return 0;
      }
      setup_threads(flash_args.common);
      require_path(flash_args.noflash, "noflash");
      require_path(flash_args.flash, "flash");
      require_path(flash_args.output, "output");
      const rgif::Image noflash = rgif::load_image(flash_args.noflash);
      const rgif::Image flash_img = rgif::load_image(flash_args.flash);
      const bool record = !flash_args.common.trace_path.empty();
      const auto result = rgif::flash_noflash(noflash, flash_img, p, record);
      return finish(result, flash_args.output, flash_args.common);
    }

    if (detail->parsed()) {
      const auto p = resolve_params(
          rgif::preset(rgif::Application::kDetailEnhance), detail_args.common);
      if (detail_args.common.print_params) {
        std::cout << rgif::params_to_text(p);
        return 0;
      }
      setup_threads(detail_args.common);
      require_path(detail_args.input, "input");
      require_path(detail_args.output, "output");
      const rgif::Image input = rgif::load_image(detail_args.input);
      const bool record = !detail_args.common.trace_path.empty();
      const auto result =
          rgif::detail_enhance(input, detail_args.boost, p, record);
      return finish(result, detail_args.output, detail_args.common);
    }

    if (tonemap->parsed()) {
      const auto p = resolve_params(rgif::preset(rgif::Application::kTonemap),
                                    tonemap_args.common);
      if (tonemap_args.common.print_params) {
        std::cout << rgif::params_to_text(p);
        return 0;
      }
      setup_threads(tonemap_args.common);
      require_path(tonemap_args.input, "input");
      require_path(tonemap_args.output, "output");
      const rgif::Image hdr = rgif::load_image(tonemap_args.input);
      const bool record = !tonemap_args.common.trace_path.empty();
      const auto result = rgif::tonemap_hdr(
          hdr,
          {tonemap_args.gains[0], tonemap_args.gains[1],
           tonemap_args.gains[2]},
          tonemap_args.compression, p, record);
      return finish(result, tonemap_args.output, tonemap_args.common);
    }

    if (texture->parsed()) {
      const auto p = resolve_params(
          rgif::preset(rgif::Application::kTextureSmooth), texture_args.common);
      if (texture_args.common.print_params) {
        std::cout << rgif::params_to_text(p);
        return 0;
      }
      setup_threads(texture_args.common);
      require_path(texture_args.input, "input");
      require_path(texture_args.output, "output");
      const rgif::Image input = rgif::load_image(texture_args.input);
      const bool record = !texture_args.common.trace_path.empty();
      const auto result = rgif::texture_smooth(input, p, record);
      return finish(result, texture_args.output, texture_args.common);
    }

    if (dejpeg->parsed()) {
      const auto p = resolve_params(rgif::preset(rgif::Application::kDejpeg),
                                    dejpeg_args.common);
      if (dejpeg_args.common.print_params) {
        std::cout << rgif::params_to_text(p);
        return 0;
      }
      setup_threads(dejpeg_args.common);
      require_path(dejpeg_args.input, "input");
      require_path(dejpeg_args.output, "output");
      const rgif::Image input = rgif::load_image(dejpeg_args.input);
      const bool record = !dejpeg_args.common.trace_path.empty();
      const auto result = rgif::dejpeg_clipart(input, p, record);
      return finish(result, dejpeg_args.output, dejpeg_args.common);
    }
  } catch (const rgif::ContractError& e) {
    std::cerr << "rgif: " << e.what() << "\n";
    return 1;
  } catch (const rgif::IoError& e) {
    std::cerr << "rgif: " << e.what() << "\n";
    return 2;
  } catch (const rgif::FormatError& e) {
    std::cerr << "rgif: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "rgif: " << e.what() << "\n";
    return 1;
  }
  return 1;
}
