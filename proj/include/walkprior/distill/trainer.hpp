#pragma once

#include <memory>
#include <string>

#include "walkprior/distill/discriminator.hpp"
#include "walkprior/distill/student.hpp"
#include "walkprior/ppo/trainer.hpp"

namespace wp::distill {

struct StudentOptions {
  ppo::TrainOptions train;  // ppo.learning_rate is held fixed
  StudentCoefs coefs;
  DiscConfig disc;
  bool init_normalizer_from_teacher = true;
};

struct StudentResult {
  ppo::ActorCritic policy;
  ppo::ObsNormalizer norm;
  Discriminator disc;
  std::vector<ppo::IterationMetrics> history;
  std::string checkpoint_path;
  std::string deploy_path;
  std::string metrics_path;
};

StudentResult train_student(const env::EnvFactory& factory, const TeacherOracle& teacher,
                            const StudentOptions& opts);

}  // namespace wp::distill
