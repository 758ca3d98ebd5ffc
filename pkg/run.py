"""Hardy–Sobolev 数值实验启动脚本"""

from cli import main

if __name__ == '__main__':
    main()
