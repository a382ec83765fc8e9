#include "rehearsal/scenario.hpp"

namespace rehearsal {

namespace {

Step prompt(std::string id, std::string text, Millis duration_ms) {
  return Step{std::move(id), Prompt{std::move(text), duration_ms}};
}

Step wait(std::string id, std::string cue, Millis duration_ms) {
  return Step{std::move(id), TimedWait{duration_ms, std::move(cue)}};
}

constexpr Millis kHoldMs = 10000;
constexpr Millis kGraceMs = 2000;

Step breath_hold(std::string id) {
  return Step{std::move(id),
              BreathHoldSpec{kHoldMs, kGraceMs,
                             Prompt{"No problem if you had to let the air out early. Keeping still is what "
                                    "matters most, and you will get another chance on the day.",
                                    8000}}};
}

}  // namespace

Scenario canonical_default_scenario() {
  Scenario s;
  s.id = "ct_default";
  s.version = "1";
  s.dwell_threshold_ms = 2000;
  s.tick_hint_ms = 50;

  Phase tour{"tutorial", PhaseKind::kTutorial, {}, "relaxation"};
  tour.steps = {
      prompt("welcome", "Hello and welcome. This short rehearsal walks you through a CT appointment.", 10000),
      prompt("greeting", "I am the radiographer who will look after you. Let me show you the room first.", 15000),
      prompt("scanner",
             "In the middle of the room is the scanner: a padded bed in front of a wide, open ring.", 20000),
      prompt("gantry", "The ring houses the imaging equipment. It spins quietly while the pictures are taken.",
             20000),
      prompt("intercom", "A microphone links you to the staff at all times. Just talk if you need anything.",
             15000),
      wait("explore", "look_around_room", 210000),
      prompt("control_window", "Staff sit behind that glass panel and watch you throughout.", 15000),
      prompt("lie_down", "Please settle onto your back now; the rest of the rehearsal happens on the bed.",
             20000),
      wait("table_transition", "fade_to_table_view", 15000),
  };

  Phase relax{"relaxation", PhaseKind::kRelaxation, {}, "breath_hold_practice"};
  relax.steps = {
      prompt("guided_breathing",
             "Breathe in gently through your nose for four counts, then out through your mouth for six.", 30000),
      prompt("muscle_release", "Let your arms grow heavy and your hands loosen on the bed.", 30000),
      wait("settle", "dimmed_lights_ambient_music", 30000),
  };

  Phase practice{"breath_hold_practice", PhaseKind::kBreathHoldPractice, {}, "scan"};
  practice.steps = {
      prompt("announce", "Next we will rehearse holding your breath, as the scanner will ask you to.", 15000),
      prompt("countdown", "Get ready: three, two, one.", 3000),
      breath_hold("practice_hold"),
      prompt("breathe_normally", "Nicely done. Let your breathing return to its own rhythm.", 5000),
  };

  Phase scan{"scan", PhaseKind::kScan, {}, "debrief"};
  scan.steps = {
      prompt("start_scan", "We are ready to begin. The scan itself takes only a few moments.", 12000),
      wait("technologist_exit", "technologist_leaves_room", 10000),
      wait("table_in", "table_slides_into_gantry", 15000),
      breath_hold("scan_hold"),
      wait("gantry_rotation", "gantry_hum", 6000),
      wait("table_out", "table_slides_out", 10000),
      prompt("all_done", "That is the end of the scan. You may breathe freely.", 5000),
  };

  Phase debrief{"debrief", PhaseKind::kDebrief, {}, std::string(kEndMarker)};
  debrief.steps = {
      prompt("congratulations", "Well done. The real appointment will follow the same steps you just saw.", 10000),
      prompt("contrast",
             "Some scans use a contrast injection, which can bring a brief feeling of warmth. It passes "
             "within a minute or two.",
             15000),
      Step{"questions",
           QAGroup{{
                       {"How much radiation is involved?",
                        Prompt{"The dose is kept as low as possible, and your care team only requests a scan when "
                               "the information it gives is worth it.",
                               12000}},
                       {"What can I do if I get nervous?",
                        Prompt{"Use the slow breathing from earlier, and remember the staff can hear you and "
                               "will answer straight away.",
                               12000}},
                       {"How do I get my results?",
                        Prompt{"A specialist reads the images and the findings go to the clinician who referred "
                               "you.",
                               12000}},
                   },
                   true}},
      prompt("closing", "Thank you for rehearsing. You now know what to expect on the day.", 12000),
      Step{"end_choice",
           Choice{{
               GazeTarget{"replay", "Replay", ReplayAction{}},
               GazeTarget{"finish", "Finish", FinishAction{}},
           }}},
  };

  s.phases = {std::move(tour), std::move(relax), std::move(practice), std::move(scan), std::move(debrief)};
  s.adaptation_rules = {AdaptationRule{PhaseKind::kRelaxation, Metric::kMeanHrBpm, 95.0, 30000, 1}};
  return s;
}

}  // namespace rehearsal
