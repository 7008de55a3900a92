#include "odrop/error.hpp"
#include "odrop/nn.hpp"

namespace odrop::nn {
namespace {

void check_header(const nlohmann::json& doc, const char* format) {
  if (!doc.is_object() || doc.value("format", std::string()) != format) {
    throw ParseError(std::string("not an ") + format + " document");
  }
  if (doc.value("version", 0) != 1) throw ParseError(std::string("unsupported ") + format + " version");
}

}  // namespace

nlohmann::json Mlp::to_json() const {
  nlohmann::json doc = net_.to_json();
  doc["format"] = "odrop.mlp";
  doc["version"] = 1;
  return doc;
}

Mlp Mlp::from_json(const nlohmann::json& doc) {
  check_header(doc, "odrop.mlp");
  DenseStack net = DenseStack::from_json(doc);
  if (net.output_width() != kClasses || net.n_layers() < 2) {
    throw ParseError("classifier must have a hidden layer and two logits");
  }
  return Mlp(std::move(net));
}

nlohmann::json Vae::to_json() const {
  return {{"format", "odrop.vae"}, {"version", 1}, {"encoder", encoder_.to_json()}, {"decoder", decoder_.to_json()}};
}

Vae Vae::from_json(const nlohmann::json& doc) {
  check_header(doc, "odrop.vae");
  Vae vae;
  vae.encoder_ = DenseStack::from_json(doc.at("encoder"));
  vae.decoder_ = DenseStack::from_json(doc.at("decoder"));
  if (vae.encoder_.output_width() % 2 != 0 || vae.decoder_.input_width() != vae.encoder_.output_width() / 2 ||
      vae.decoder_.output_width() != vae.encoder_.input_width()) {
    throw ParseError("VAE encoder and decoder shapes do not chain");
  }
  return vae;
}

}  // namespace odrop::nn
