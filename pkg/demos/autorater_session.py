# %% [markdown]
# # Closing the loop on a real plant
#
# Here the feedback does not come from a synthetic utility: every sampled
# gain setting is run as a closed-loop episode on the simulated two-link
# arm, and an automatic rater turns the episode metrics (tracking error,
# torque chatter, saturation) into the same preference/ordinal feedback a
# human operator would give.  The tuner never sees the metrics themselves —
# only the comparisons.

# %%
import argparse

import numpy as np

from preftune.session import Session, SessionConfig

parser = argparse.ArgumentParser(description=__doc__)
parser.add_argument("--seed", type=int, default=0)
parser.add_argument("--budget", type=int, default=50)
args = parser.parse_args()

cfg = SessionConfig(
    budget=args.budget,
    seed=args.seed,
    feedback_source="autorater",
    dimensions=[["q_pos", 10.0, 2000.0, 8], ["q_vel", 1.0, 200.0, 8]],
    episode={"profile": "toy", "duration": 1.5},
)
session = Session(cfg)

# %% [markdown]
# Run the loop, remembering the first few distinct actions the tuner tried
# so we can measure how much better the final choice is.

# %%
early = [session.current_action]
while not session.completed:
    ev = session.auto_feedback()
    session.submit_feedback(ev, _persist=False)
    if not session.completed and len(early) < 10 and session.current_action.uid != early[-1].uid:
        early.append(session.current_action)
    if session.iteration % 10 == 0:
        best = session.believed_best_action()
        print(f"iter {session.iteration:3d}: believed best id={best.uid} {best.values}")

# %% [markdown]
# Compare the believed-best controller against the median of the early
# samples on the metric the rater was built around.

# %%
early_rms = [session.episode_metrics(a).tracking_rms for a in early]
best = session.believed_best_action()
best_rms = session.episode_metrics(best).tracking_rms
print(f"median tracking RMS of first {len(early)} samples: {np.median(early_rms):.4f} rad")
print(f"tracking RMS of believed best (id={best.uid}):      {best_rms:.4f} rad")
print(f"improved: {best_rms < np.median(early_rms)}")
