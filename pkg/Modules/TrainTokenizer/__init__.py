# Пустой файл для инициализации модуля
