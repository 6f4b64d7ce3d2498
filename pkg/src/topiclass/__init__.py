"""Web-page classification with topic features, hyperlink-neighbor integration
and a confusion-driven hierarchical SVM."""

__version__ = "0.1.0"
