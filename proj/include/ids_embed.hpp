#pragma once
//------------------------------------------------------------------------------
//
//   Copyright 2026 The ids-embed Authors
//
//   Licensed under the Apache License, Version 2.0 (the "License");
//   you may not use this file except in compliance with the License.
//   You may obtain a copy of the License at
//
//       http://www.apache.org/licenses/LICENSE-2.0
//
//   Unless required by applicable law or agreed to in writing, software
//   distributed under the License is distributed on an "AS IS" BASIS,
//   WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
//   See the License for the specific language governing permissions and
//   limitations under the License.
//
//------------------------------------------------------------------------------

#include "ids_embed/adam.hpp"
#include "ids_embed/common.hpp"
#include "ids_embed/corpus.hpp"
#include "ids_embed/error.hpp"
#include "ids_embed/evaluation.hpp"
#include "ids_embed/forecast.hpp"
#include "ids_embed/inference.hpp"
#include "ids_embed/joint_model.hpp"
#include "ids_embed/model_io.hpp"
#include "ids_embed/synthetic.hpp"
#include "ids_embed/trainer.hpp"
#include "ids_embed/transfer.hpp"
#include "ids_embed/zipf_sampler.hpp"
