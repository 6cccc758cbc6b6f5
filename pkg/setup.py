from distutils.core import setup

setup(
    name="ChangePointPipeline",
    version="0.1.0",
    packages=[
        "detect_changepoints",
    ],
    scripts=[
        "changepoints.py",
    ]
)
