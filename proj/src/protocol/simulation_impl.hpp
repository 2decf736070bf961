#pragma once

#include <memory>
#include <vector>

#include "entities.hpp"

namespace psum::protocol {

struct Simulation::Impl {
  SystemConfig cfg;
  detail::Directory dir;
  Network net;
  std::uint64_t stream = 0;
  Rng setup_rng;
  std::unique_ptr<crypto::CertificateAuthority> ca_ext;
  std::unique_ptr<detail::RegistrationCa> ca_r;
  std::unique_ptr<detail::Merchant> merchant;
  std::unique_ptr<detail::Monitor> monitor;
  std::unique_ptr<detail::Judge> judge;
  std::unique_ptr<detail::SuperPeer> superpeer;
  std::unique_ptr<detail::SfProvider> seeder;
  std::vector<std::unique_ptr<detail::Proxy>> proxies;
  std::vector<std::unique_ptr<detail::Relay>> relays;
  std::vector<std::unique_ptr<detail::Buyer>> buyers;

  Rng next_rng() { return make_rng(cfg.seed, stream++); }
};

}  // namespace psum::protocol
