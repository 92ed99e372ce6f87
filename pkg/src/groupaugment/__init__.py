"""Group-structured augmentation policy search toolkit.

Subsystems:

* :mod:`groupaugment.image` / :mod:`groupaugment.kernels`: 8-bit RGB images
  and the augmentation kernel catalog.
* :mod:`groupaugment.policy`: group-structured policy sampling and the
  comparison policies behind one interface.
* :mod:`groupaugment.space`: typed hyperparameter spaces with expert priors.
* :mod:`groupaugment.bo`: prior-weighted Bayesian optimization.
* :mod:`groupaugment.harness`: objective evaluation over a line-delimited
  JSON subprocess protocol, plus synthetic objectives.
* :mod:`groupaugment.analysis`: fANOVA importance and density reports.
* :mod:`groupaugment.cli`: the ``groupaugment`` command.
"""

__version__ = "0.1.0"
