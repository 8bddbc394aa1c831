#pragma once

#include "planverify/checker.hpp"
#include "planverify/error.hpp"
#include "planverify/flexibility.hpp"
#include "planverify/json_io.hpp"
#include "planverify/llm.hpp"
#include "planverify/llm_http.hpp"
#include "planverify/loop.hpp"
#include "planverify/ltl.hpp"
#include "planverify/plan_model.hpp"
#include "planverify/scenario.hpp"
#include "planverify/service.hpp"
#include "planverify/store.hpp"
#include "planverify/templates.hpp"
#include "planverify/translator.hpp"
