#include "vseg/vseg.h"

#include <cstring>
#include <string>
#include <vector>

#include "vseg/app.hpp"
#include "vseg/config.hpp"
#include "vseg/error.hpp"
#include "vseg/infer.hpp"
#include "vseg/nn/weights_io.hpp"

struct vseg_config {
  vseg::RunConfig cfg;
};

struct vseg_model {
  vseg::nn::Model<float> model;
};

namespace {

static_assert(static_cast<int>(vseg::ErrorCode::InvalidArgument) + 1 == VSEG_ERR_INVALID_ARGUMENT);
static_assert(static_cast<int>(vseg::ErrorCode::NumericAbort) + 1 == VSEG_ERR_NUMERIC_ABORT);

thread_local std::string last_error;

vseg_status fail(vseg_status s, std::string msg) {
  last_error = std::move(msg);
  return s;
}

template <typename F>
vseg_status guard(F&& fn) {
  try {
    fn();
    last_error.clear();
    return VSEG_OK;
  } catch (const vseg::Error& e) {
    return fail(static_cast<vseg_status>(static_cast<int>(e.code()) + 1), e.what());
  } catch (const std::bad_alloc&) {
    return fail(VSEG_ERR_INTERNAL, "out of memory");
  } catch (const std::filesystem::filesystem_error& e) {
    return fail(VSEG_ERR_IO_FAILURE, std::string("IoFailure: ") + e.what());
  } catch (const std::exception& e) {
    return fail(VSEG_ERR_INTERNAL, std::string("internal error: ") + e.what());
  }
}

void need(const void* p, const char* what) {
  if (!p) throw vseg::Error(vseg::ErrorCode::InvalidArgument, std::string(what) + " is NULL");
}

vseg::app::Log to_log(vseg_log_fn fn, void* user) {
  if (!fn) return {};
  return [fn, user](const std::string& line) { fn(line.c_str(), user); };
}

vseg_status copy_out(const std::string& s, char* buf, size_t cap, size_t* needed) {
  if (needed) *needed = s.size() + 1;
  if (buf && cap >= s.size() + 1) {
    std::memcpy(buf, s.c_str(), s.size() + 1);
    return VSEG_OK;
  }
  if (!buf) return VSEG_OK;
  return fail(VSEG_ERR_INVALID_ARGUMENT, "InvalidArgument: buffer too small");
}

std::string opt(const char* s) { return s ? std::string(s) : std::string(); }

}  // namespace

extern "C" {

const char* vseg_version(void) { return "0.1.0"; }

const char* vseg_last_error(void) { return last_error.c_str(); }

const char* vseg_status_name(vseg_status status) {
  if (status == VSEG_OK) return "Ok";
  if (status == VSEG_ERR_INTERNAL) return "Internal";
  if (status < VSEG_ERR_MALFORMED_HEADER || status > VSEG_ERR_INVALID_ARGUMENT) return "Unknown";
  return vseg::error_name(static_cast<vseg::ErrorCode>(status - 1));
}

int vseg_status_exit_code(vseg_status status) {
  if (status == VSEG_OK) return 0;
  if (status < VSEG_ERR_MALFORMED_HEADER || status > VSEG_ERR_INVALID_ARGUMENT) return 2;
  return vseg::error_exit_code(static_cast<vseg::ErrorCode>(status - 1));
}

vseg_status vseg_config_create(vseg_config** out) {
  return guard([&] {
    need(out, "out");
    *out = new vseg_config{};
  });
}

void vseg_config_destroy(vseg_config* cfg) { delete cfg; }

vseg_status vseg_config_set(vseg_config* cfg, const char* key, const char* value) {
  return guard([&] {
    need(cfg, "cfg"), need(key, "key"), need(value, "value");
    cfg->cfg.set(key, value);
  });
}

vseg_status vseg_config_load(vseg_config* cfg, const char* path) {
  return guard([&] {
    need(cfg, "cfg"), need(path, "path");
    cfg->cfg.load_file(path);
  });
}

vseg_status vseg_config_check(const vseg_config* cfg) {
  return guard([&] {
    need(cfg, "cfg");
    cfg->cfg.check();
  });
}

vseg_status vseg_config_get(const vseg_config* cfg, const char* key, char* buf, size_t cap, size_t* needed) {
  std::string value;
  const auto s = guard([&] {
    need(cfg, "cfg"), need(key, "key");
    value = cfg->cfg.get(key);
  });
  return s == VSEG_OK ? copy_out(value, buf, cap, needed) : s;
}

vseg_status vseg_config_dump(const vseg_config* cfg, char* buf, size_t cap, size_t* needed) {
  std::string text;
  const auto s = guard([&] {
    need(cfg, "cfg");
    text = cfg->cfg.to_text();
  });
  return s == VSEG_OK ? copy_out(text, buf, cap, needed) : s;
}

vseg_status vseg_preprocess(const vseg_config* cfg, const char* dataset_dir, const char* out_dir, vseg_log_fn log,
                            void* user) {
  return guard([&] {
    need(cfg, "cfg"), need(dataset_dir, "dataset_dir"), need(out_dir, "out_dir");
    vseg::app::cmd_preprocess(cfg->cfg, dataset_dir, out_dir, to_log(log, user));
  });
}

vseg_status vseg_train(const vseg_config* cfg, const char* dataset_dir, const char* out_dir, vseg_log_fn log,
                       void* user) {
  return guard([&] {
    need(cfg, "cfg"), need(dataset_dir, "dataset_dir"), need(out_dir, "out_dir");
    vseg::app::cmd_train(cfg->cfg, dataset_dir, out_dir, to_log(log, user));
  });
}

vseg_status vseg_predict(const vseg_config* cfg, const char* checkpoint, const char* const* inputs, size_t n_inputs,
                         const char* stats_path, const char* out_dir, vseg_log_fn log, void* user) {
  return guard([&] {
    need(cfg, "cfg"), need(checkpoint, "checkpoint"), need(out_dir, "out_dir");
    if (n_inputs) need(inputs, "inputs");
    std::vector<std::filesystem::path> paths;
    for (size_t i = 0; i < n_inputs; ++i) {
      need(inputs[i], "input path");
      paths.emplace_back(inputs[i]);
    }
    vseg::app::cmd_predict(cfg->cfg, checkpoint, paths, opt(stats_path), out_dir, to_log(log, user));
  });
}

vseg_status vseg_evaluate(const vseg_config* cfg, const char* pred_dir, const char* gt_dir, const char* fov_dir,
                          const char* out_dir, vseg_log_fn log, void* user) {
  return guard([&] {
    need(cfg, "cfg"), need(pred_dir, "pred_dir"), need(gt_dir, "gt_dir"), need(fov_dir, "fov_dir");
    need(out_dir, "out_dir");
    vseg::app::cmd_evaluate(cfg->cfg, pred_dir, gt_dir, fov_dir, out_dir, to_log(log, user));
  });
}

vseg_status vseg_crossval(const vseg_config* cfg, const char* dataset_dir, const char* strata_path, int k,
                          const char* out_dir, vseg_log_fn log, void* user) {
  return guard([&] {
    need(cfg, "cfg"), need(dataset_dir, "dataset_dir"), need(out_dir, "out_dir");
    if (k < 0) throw vseg::Error(vseg::ErrorCode::BadK, "k must be >= 2");
    vseg::app::cmd_crossval(cfg->cfg, dataset_dir, opt(strata_path), k, out_dir, to_log(log, user));
  });
}

vseg_status vseg_synth(const vseg_config* cfg, const char* out_dir, vseg_log_fn log, void* user) {
  return guard([&] {
    need(cfg, "cfg"), need(out_dir, "out_dir");
    vseg::app::cmd_synth(cfg->cfg, out_dir, to_log(log, user));
  });
}

vseg_status vseg_model_load(const char* path, vseg_model** out) {
  return guard([&] {
    need(path, "path"), need(out, "out");
    *out = new vseg_model{vseg::nn::load_model(path)};
  });
}

void vseg_model_destroy(vseg_model* model) { delete model; }

size_t vseg_model_parameter_count(const vseg_model* model) { return model ? model->model.parameter_count() : 0; }

vseg_status vseg_model_predict(const vseg_model* model, const vseg_config* cfg, const double* gray, int width,
                               int height, double* prob) {
  return guard([&] {
    need(model, "model"), need(cfg, "cfg"), need(gray, "gray"), need(prob, "prob");
    if (width < 1 || height < 1) throw vseg::Error(vseg::ErrorCode::InvalidArgument, "image dimensions must be >= 1");
    vseg::GrayImage img(width, height);
    std::copy(gray, gray + img.data.size(), img.data.begin());
    const auto ic = cfg->cfg.infer();
    vseg::infer::validate(ic);
    const auto p = vseg::infer::predict_image(model->model, img, ic);
    std::copy(p.data.begin(), p.data.end(), prob);
  });
}

}  // extern "C"
