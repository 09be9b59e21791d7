"""Provides the :class:`AbstractMethod` exception."""

# SPDX-License-Identifier: BSD-3-Clause

import inspect


class AbstractMethod(NotImplementedError):
    """
    An abstract hook meant to be overridden.

    Raised by the base classes of the strategy and claim-distribution
    registries when a subclass forgot to provide one of the hooks the
    simulator or the truncated-moment functions rely on.
    """

    def __init__(self) -> None:
        """
        Raise a ``NotImplementedError``.

        Name the concrete class and the hook it is missing.
        """
        caller = inspect.currentframe().f_back
        owner = caller.f_locals.get("self", caller.f_locals.get("cls"))
        class_name = (
            owner.__name__ if isinstance(owner, type) else type(owner).__name__
        )
        super().__init__(
            f"`{class_name}` must implement `{caller.f_code.co_name}()`."
        )
